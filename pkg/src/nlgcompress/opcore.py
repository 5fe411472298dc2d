"""Dense complex linear algebra used throughout the package.

Everything here works on plain ``numpy`` arrays.  :class:`Operator` and
:class:`StateVector` are thin validated wrappers used where a value needs to
carry its dimension explicitly (serialization, strategy containers); every
function accepts either the wrapper or a bare array.

Tensor ordering convention: in ``kron(a, b)`` the first factor owns the most
significant index block, so the basis state ``|i>|j>`` sits at ``i * dim_b + j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)

PAULIS = {"I": I2, "1": I2, "X": X, "Y": Y, "Z": Z}


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NotHermitianError(ValueError):
    pass


class NonCommutingError(ValueError):
    """A family that must commute does not; ``max_norm`` is the worst commutator."""

    def __init__(self, message: str, max_norm: float):
        super().__init__(message)
        self.max_norm = max_norm


def as_array(a) -> np.ndarray:
    if isinstance(a, (Operator, StateVector)):
        return a.array
    return np.asarray(a, dtype=complex)


@dataclass(frozen=True)
class Operator:
    """A ``dim x dim`` complex matrix."""

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise DimensionError(f"operator must be a non-empty square matrix, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self.entries

    def to_json(self) -> dict:
        return {"dim": self.dim, "entries": _complex_to_pairs(self.entries)}

    @classmethod
    def from_json(cls, data: dict) -> "Operator":
        entries = _pairs_to_complex(data["entries"])
        if entries.shape != (data["dim"], data["dim"]):
            raise DimensionError(f"declared dim {data['dim']} does not match entries shape {entries.shape}")
        return cls(entries)


@dataclass(frozen=True)
class StateVector:
    """A unit vector; the norm is checked to within ``1e-12``."""

    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if arr.size < 1:
            raise DimensionError("state vector must be non-empty")
        norm = np.linalg.norm(arr)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state vector is not normalized (norm {norm!r})")
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self.amplitudes

    def to_json(self) -> dict:
        return {"dim": self.dim, "amplitudes": _complex_to_pairs(self.amplitudes)}

    @classmethod
    def from_json(cls, data: dict) -> "StateVector":
        amps = _pairs_to_complex(data["amplitudes"])
        if amps.shape != (data["dim"],):
            raise DimensionError(f"declared dim {data['dim']} does not match amplitudes shape {amps.shape}")
        return cls(amps)


def _complex_to_pairs(arr: np.ndarray):
    if arr.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in arr]
    return [_complex_to_pairs(row) for row in arr]


def _pairs_to_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise DimensionError("complex entries must be encoded as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


# --- constructors -----------------------------------------------------------

def pauli(label: str) -> np.ndarray:
    """Tensor product of Pauli matrices, e.g. ``pauli("XZ")`` or ``pauli("-YI")``."""
    sign = 1.0
    if label.startswith("-"):
        sign, label = -1.0, label[1:]
    elif label.startswith("+"):
        label = label[1:]
    try:
        factors = [PAULIS[c] for c in label.upper()]
    except KeyError as exc:
        raise ValueError(f"unknown Pauli letter in {label!r}") from exc
    return sign * kron(*factors)


def basis_state(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def max_entangled(d: int) -> np.ndarray:
    """``|Phi_d> = sum_j |j>|j> / sqrt(d)`` on ``C^d (x) C^d``."""
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


def dag(a) -> np.ndarray:
    return as_array(a).conj().T


def kron(*ops) -> np.ndarray:
    if not ops:
        raise DimensionError("kron needs at least one operand")
    return reduce(np.kron, (as_array(o) for o in ops))


def commutator(a, b) -> np.ndarray:
    a, b = as_array(a), as_array(b)
    if a.shape != b.shape:
        raise DimensionError(f"commutator of shapes {a.shape} and {b.shape}")
    return a @ b - b @ a


def frob(a) -> float:
    return float(np.linalg.norm(as_array(a)))


def is_hermitian(a, tol: float = DEFAULT_TOL) -> bool:
    a = as_array(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and frob(a - a.conj().T) <= tol


def is_unitary(a, tol: float = DEFAULT_TOL) -> bool:
    a = as_array(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and frob(a.conj().T @ a - np.eye(a.shape[0])) <= tol


def expectation(state, op) -> complex:
    psi = as_array(state)
    return complex(np.vdot(psi, as_array(op) @ psi))


# --- spectral ---------------------------------------------------------------

def herm_eig(a, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvector columns of a Hermitian matrix."""
    a = as_array(a)
    if not is_hermitian(a, tol):
        raise NotHermitianError("herm_eig requires a Hermitian matrix")
    # symmetrize so round-off in the lower triangle is not silently ignored
    return np.linalg.eigh((a + a.conj().T) / 2)


def max_pairwise_commutator(ops: Sequence) -> float:
    worst = 0.0
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            worst = max(worst, frob(commutator(ops[i], ops[j])))
    return worst


def simultaneous_diag(
    ops: Sequence,
    tol: float = DEFAULT_TOL,
    rng: np.random.Generator | None = None,
    attempts: int = 3,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Common orthonormal eigenbasis of a commuting Hermitian family.

    A random real combination of the family is eigendecomposed and every
    member is checked to be diagonal in the result; a degenerate draw is
    retried with fresh coefficients.

    Returns:
        ``(V, diagonals)`` with ``V`` unitary (columns are the basis) and
        ``diagonals[k]`` the real diagonal of ``V^dag ops[k] V``.

    Raises:
        NonCommutingError: the family does not commute to within ``tol``.
    """
    mats = [as_array(o) for o in ops]
    if not mats:
        raise ValueError("simultaneous_diag needs at least one operator")
    dim = mats[0].shape[0]
    for m in mats:
        if m.shape != (dim, dim):
            raise DimensionError("all operators must share one dimension")
        if not is_hermitian(m, tol):
            raise NotHermitianError("simultaneous_diag requires Hermitian operators")
    worst = max_pairwise_commutator(mats)
    if worst > tol:
        raise NonCommutingError(f"operators do not commute (max commutator norm {worst:.3e})", worst)

    rng = np.random.default_rng(0) if rng is None else rng
    last = np.inf
    for _ in range(attempts):
        coeffs = rng.normal(size=len(mats))
        combo = sum(c * m for c, m in zip(coeffs, mats))
        _, vecs = np.linalg.eigh((combo + combo.conj().T) / 2)
        rotated = [vecs.conj().T @ m @ vecs for m in mats]
        last = max(_max_offdiag(r) for r in rotated)
        if last <= tol:
            return vecs, [np.real(np.diag(r)).copy() for r in rotated]
    raise ArithmeticError(f"simultaneous diagonalization failed (off-diagonal residual {last:.3e})")


def _max_offdiag(m: np.ndarray) -> float:
    off = m - np.diag(np.diag(m))
    return float(np.max(np.abs(off))) if off.size else 0.0


# --- subsystems -------------------------------------------------------------

def _check_dims(total: int, dims: Sequence[int]) -> None:
    if int(np.prod(dims)) != total:
        raise DimensionError(f"subsystem dims {list(dims)} do not multiply to {total}")


def partial_trace(state_or_op, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced operator on the subsystems listed in ``keep`` (kept in ascending order)."""
    a = as_array(state_or_op)
    dims = list(dims)
    keep = sorted(set(keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")
    trace_out = [k for k in range(n) if k not in keep]
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1

    if a.ndim == 1:
        _check_dims(a.shape[0], dims)
        psi = a.reshape(dims)
        # rho_keep = sum over traced indices of psi psi^*
        mat = np.transpose(psi, keep + trace_out).reshape(kept_dim, -1)
        return mat @ mat.conj().T

    _check_dims(a.shape[0], dims)
    t = a.reshape(dims + dims)
    for offset, k in enumerate(trace_out):
        # indices shift left as earlier subsystems are traced away
        axis = k - offset
        t = np.trace(t, axis1=axis, axis2=axis + t.ndim // 2)
    return t.reshape(kept_dim, kept_dim)


def permute_subsystems(state_or_op, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: new factor ``k`` is old factor ``perm[k]``."""
    a = as_array(state_or_op)
    dims = list(dims)
    perm = list(perm)
    if sorted(perm) != list(range(len(dims))):
        raise ValueError(f"{perm} is not a permutation of {len(dims)} subsystems")
    _check_dims(a.shape[0], dims)
    if a.ndim == 1:
        return np.transpose(a.reshape(dims), perm).reshape(-1)
    n = len(dims)
    t = np.transpose(a.reshape(dims + dims), perm + [n + p for p in perm])
    return t.reshape(a.shape)


def schmidt_coefficients(state, dims: tuple[int, int]) -> np.ndarray:
    psi = as_array(state)
    d_a, d_b = dims
    if d_a * d_b != psi.shape[0]:
        raise DimensionError(f"{d_a} x {d_b} split does not match state dimension {psi.shape[0]}")
    return np.linalg.svd(psi.reshape(d_a, d_b), compute_uv=False)


def schmidt_rank(state, dims: tuple[int, int], tol: float = DEFAULT_TOL) -> int:
    return int(np.sum(schmidt_coefficients(state, dims) > tol))


# --- POVMs ------------------------------------------------------------------

@dataclass(frozen=True)
class PovmCheck:
    ok: bool
    hermiticity: float
    min_eigenvalue: float
    completeness: float

    def __bool__(self) -> bool:
        return self.ok


def is_povm(elements: Sequence, tol: float = DEFAULT_TOL) -> PovmCheck:
    """Check Hermiticity, positivity and completeness of a measurement family.

    The residuals are always reported; ``ok`` is the verdict at ``tol``.
    """
    mats = [as_array(e) for e in elements]
    if not mats:
        return PovmCheck(False, 0.0, 0.0, float("inf"))
    dim = mats[0].shape[0]
    if any(m.shape != (dim, dim) for m in mats):
        raise DimensionError("POVM elements must share one dimension")
    herm = max(frob(m - m.conj().T) for m in mats)
    min_eig = min(float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0]) for m in mats)
    completeness = frob(sum(mats) - np.eye(dim))
    ok = herm <= tol and min_eig >= -tol and completeness <= tol
    return PovmCheck(ok, herm, min_eig, completeness)


def check_dims_power_of_two(d: int) -> int:
    """Number of qubits for a dimension that must be a power of two."""
    n = int(d).bit_length() - 1
    if d < 1 or 2**n != d:
        raise DimensionError(f"dimension {d} is not a power of two")
    return n
