"""Lie closures of game algebras, the SU(4) Cartan decomposition and KAK."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from . import opcore
from .opcore import DEFAULT_TOL, I2, X, Y, Z, as_array, frob

PIVOT_TOL = 1e-8
RANK_TOL = 1e-8


class ClosureError(RuntimeError):
    """Lie closure grew past the allowed dimension."""


def _vec(m: np.ndarray) -> np.ndarray:
    # Re tr(A^dag B) is the Euclidean product of these real vectors
    flat = np.asarray(m).reshape(-1)
    return np.concatenate([flat.real, flat.imag])


def _unvec(v: np.ndarray, dim: int) -> np.ndarray:
    half = v.size // 2
    return (v[:half] + 1j * v[half:]).reshape(dim, dim)


def _traceless(m: np.ndarray) -> np.ndarray:
    d = m.shape[0]
    return m - np.trace(m) / d * np.eye(d)


@dataclass(frozen=True, eq=False)
class LieBasis:
    """Orthonormal (under ``tr(A^dag B)``) traceless skew-Hermitian basis."""

    dim_hilbert: int
    basis: tuple = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(np.asarray(b, dtype=complex) for b in self.basis))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def matrix(self) -> np.ndarray:
        """Basis as rows of real coordinate vectors."""
        if not self.basis:
            return np.zeros((0, 2 * self.dim_hilbert**2))
        return np.stack([_vec(b) for b in self.basis])

    def gram(self) -> np.ndarray:
        m = self.matrix()
        return m @ m.T

    def project(self, m) -> np.ndarray:
        v = _vec(as_array(m))
        basis = self.matrix()
        return _unvec(basis.T @ (basis @ v), self.dim_hilbert)

    def residual(self, m) -> float:
        """Norm of the part of ``m`` orthogonal to the span."""
        m = as_array(m)
        return frob(m - self.project(m))

    def invariant_defect(self) -> float:
        """Worst skew-Hermiticity / trace defect and Gram deviation."""
        worst = 0.0
        for b in self.basis:
            worst = max(worst, frob(b + b.conj().T), abs(np.trace(b)))
        if self.basis:
            worst = max(worst, float(np.abs(self.gram() - np.eye(self.dim)).max()))
        return worst


class _Orthonormalizer:
    def __init__(self, dim: int):
        self.dim = dim
        self.rows: list[np.ndarray] = []

    def add(self, m: np.ndarray, pivot: float = PIVOT_TOL) -> np.ndarray | None:
        v = _vec(m)
        norm = np.linalg.norm(v)
        if norm <= pivot:
            return None
        v = v / norm
        for _ in range(2):
            for r in self.rows:
                v = v - (r @ v) * r
        rest = np.linalg.norm(v)
        if rest <= pivot:
            return None
        v = v / rest
        self.rows.append(v)
        return _unvec(v, self.dim)


def span_basis(elements: Sequence, dim: int | None = None, pivot: float = PIVOT_TOL) -> LieBasis:
    """Orthonormal basis of the real span of skew-Hermitian ``elements``."""
    mats = [as_array(e) for e in elements]
    if dim is None:
        if not mats:
            raise ValueError("dimension needed for an empty span")
        dim = mats[0].shape[0]
    ortho = _Orthonormalizer(dim)
    out = [b for b in (ortho.add(m, pivot) for m in mats) if b is not None]
    return LieBasis(dim, tuple(out))


def lie_closure(generators: Sequence, max_dim: int | None = None, pivot: float = PIVOT_TOL) -> LieBasis:
    """Real Lie algebra generated by ``i M`` for Hermitian generators ``M``.

    Only traceless parts are kept, so the result lives in ``su(d)``.
    Brackets are taken until none adds a component above ``pivot``.

    Raises:
        opcore.NotHermitianError: a generator is not Hermitian.
        ClosureError: the span exceeds ``max_dim``.
    """
    mats = [as_array(g) for g in generators]
    if not mats:
        raise ValueError("need at least one generator")
    d = mats[0].shape[0]
    max_dim = d * d - 1 if max_dim is None else max_dim
    ortho = _Orthonormalizer(d)
    basis: list[np.ndarray] = []
    frontier: list[np.ndarray] = []

    def take(m):
        b = ortho.add(m, pivot)
        if b is None:
            return
        if len(basis) >= max_dim:
            raise ClosureError(f"closure exceeds max_dim={max_dim}")
        basis.append(b)
        frontier.append(b)

    for m in mats:
        if m.shape != (d, d):
            raise opcore.DimensionError("generators must share one shape")
        if not opcore.is_hermitian(m, DEFAULT_TOL):
            raise opcore.NotHermitianError("generators must be Hermitian")
        take(1j * _traceless(m))
    while frontier:
        new = frontier.pop()
        for b in list(basis):
            take(opcore.commutator(new, b))
    return LieBasis(d, tuple(basis))


def is_full_su(basis: LieBasis) -> bool:
    return basis.dim == basis.dim_hilbert**2 - 1


def strategy_generators(strat, side: str = "a") -> list[np.ndarray]:
    """All POVM elements of one player, the generators of that player's algebra."""
    povms = strat.povms_a if side == "a" else strat.povms_b
    return [m for fam in povms.values() for m in fam.values()]


def adjoint_conjugate(k, basis: LieBasis) -> LieBasis:
    """``X -> k X k^dag`` on every basis element."""
    k = as_array(k)
    if k.shape != (basis.dim_hilbert,) * 2:
        raise opcore.DimensionError(f"conjugator has shape {k.shape}, basis acts on dimension {basis.dim_hilbert}")
    if not opcore.is_unitary(k, DEFAULT_TOL):
        raise ValueError("conjugator is not unitary")
    return LieBasis(basis.dim_hilbert, tuple(k @ b @ k.conj().T for b in basis.basis))


def span_rank(bases: Sequence[LieBasis], tol: float = RANK_TOL) -> int:
    """Dimension of the combined span, by singular-value thresholding."""
    rows = [b.matrix() for b in bases if b.dim]
    if not rows:
        return 0
    s = np.linalg.svd(np.vstack(rows), compute_uv=False)
    return int(np.sum(s > tol))


def max_bracket(left: LieBasis, right: LieBasis | None = None) -> float:
    right = left if right is None else right
    worst = 0.0
    for a in left.basis:
        for b in right.basis:
            worst = max(worst, frob(opcore.commutator(a, b)))
    return worst


# --- Cartan decomposition ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CartanDecomposition:
    k_basis: LieBasis
    p_basis: LieBasis
    a_basis: LieBasis

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.k_basis.dim, self.p_basis.dim, self.a_basis.dim


def _pauli_basis(labels) -> LieBasis:
    return LieBasis(4, tuple(1j * opcore.pauli(s) / 2 for s in labels))


def cartan_su4() -> CartanDecomposition:
    """Local part, two-body part and ``span{XX, YY, ZZ}`` of ``su(4)``."""
    k = [p + "I" for p in "XYZ"] + ["I" + p for p in "XYZ"]
    p = [a + b for a in "XYZ" for b in "XYZ"]
    return CartanDecomposition(_pauli_basis(k), _pauli_basis(p), _pauli_basis(["XX", "YY", "ZZ"]))


@dataclass(frozen=True)
class CartanReport:
    residuals: dict
    """Worst orthogonal component per relation: kk, kp, pp, a_in_p, a_abelian."""
    dims: tuple
    centralizer_dim: int
    """Dimension of the centralizer of a inside p; equals dim a when a is maximal."""
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol and self.centralizer_dim == self.dims[2]


def _bracket_residual(left: LieBasis, right: LieBasis, target: LieBasis) -> float:
    return max((target.residual(opcore.commutator(a, b)) for a in left.basis for b in right.basis), default=0.0)


def _centralizer_dim(a: LieBasis, p: LieBasis) -> int:
    if not p.dim:
        return 0
    # columns: ad_{a_j}(p_k) stacked over j, as a linear map of p's coordinates
    cols = []
    for pk in p.basis:
        cols.append(np.concatenate([_vec(opcore.commutator(aj, pk)) for aj in a.basis]) if a.dim else np.zeros(1))
    s = np.linalg.svd(np.stack(cols, axis=1), compute_uv=False)
    return p.dim - int(np.sum(s > RANK_TOL))


def check_cartan(cd: CartanDecomposition, tol: float = DEFAULT_TOL) -> CartanReport:
    k, p, a = cd.k_basis, cd.p_basis, cd.a_basis
    residuals = {
        "kk": _bracket_residual(k, k, k),
        "kp": _bracket_residual(k, p, p),
        "pp": _bracket_residual(p, p, k),
        "a_in_p": max((p.residual(x) for x in a.basis), default=0.0),
        "a_abelian": max_bracket(a),
    }
    return CartanReport(residuals, cd.dims, _centralizer_dim(a, p), tol)


# --- KAK -----------------------------------------------------------------------

MAGIC = np.array([
    [1, 1j, 0, 0],
    [0, 0, 1j, 1],
    [0, 0, 1j, -1],
    [1, -1j, 0, 0],
], dtype=complex) / math.sqrt(2)

XX, YY, ZZ = np.kron(X, X), np.kron(Y, Y), np.kron(Z, Z)
S_GATE = np.diag([1, 1j])
Q_GATE = (Y + Z) / math.sqrt(2)

# diagonals of XX, YY, ZZ in the magic basis, plus a column for global phase
_MAGIC_SIGNS = np.stack([np.real(np.diag(MAGIC.conj().T @ m @ MAGIC)) for m in (XX, YY, ZZ)]
                        + [np.ones(4)], axis=1)


class KakError(ValueError):
    """Input to the KAK factorization is not a 4x4 unitary."""


def canonical_gate(c) -> np.ndarray:
    """``exp(i (c_x XX + c_y YY + c_z ZZ))``."""
    cx, cy, cz = c
    return expm(1j * (cx * XX + cy * YY + cz * ZZ))


def local_factors(k) -> tuple[np.ndarray, np.ndarray, float]:
    """Split ``k ~ a (x) b`` by rank-one realignment.

    Returns unitary ``a``, ``b`` with ``k = phase * a (x) b`` and the
    Frobenius distance of ``k`` from that product (0 for local ``k``).
    """
    k = as_array(k)
    realigned = k.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(realigned)
    a = u[:, 0].reshape(2, 2) * math.sqrt(s[0])
    b = vh[0].reshape(2, 2) * math.sqrt(s[0])
    # rescale each to a unitary; the leftover scalar is absorbed in b
    scale_a = math.sqrt(abs(np.linalg.det(a))) or 1.0
    a = a / scale_a
    b = b * scale_a
    err = frob(k - np.kron(a, b))
    return a, b, err


@dataclass(frozen=True, eq=False)
class KakFactors:
    """``U = phase * k1 @ canonical_gate(c) @ k2`` with local ``k1``, ``k2``."""

    k1: np.ndarray = field(repr=False)
    k2: np.ndarray = field(repr=False)
    c: tuple
    phase: complex = 1.0

    def reconstruct(self) -> np.ndarray:
        return self.phase * self.k1 @ canonical_gate(self.c) @ self.k2

    def locality_defect(self) -> float:
        return max(local_factors(self.k1)[2], local_factors(self.k2)[2])


def reconstruction_error(u, factors: KakFactors) -> float:
    """Frobenius distance after removing the best global phase."""
    u = as_array(u)
    v = factors.k1 @ canonical_gate(factors.c) @ factors.k2
    overlap = np.trace(v.conj().T @ u)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return frob(u - phase * v)


def _real_orthogonal_diagonalizer(m: np.ndarray, rng: np.random.Generator, tol: float) -> np.ndarray:
    # m is symmetric unitary, so Re m and Im m are commuting real symmetric matrices
    for _ in range(20):
        t = rng.normal()
        _, p = np.linalg.eigh(m.real + t * m.imag)
        d = p.T @ m @ p
        if frob(d - np.diag(np.diag(d))) <= tol:
            return p
    raise KakError("could not diagonalize U^T U by a real orthogonal matrix")


def _reduce_chamber(k1, c, k2, eps=1e-12):
    c = [float(v) for v in c]
    sigmas = (X, Y, Z)
    flips = {(0, 1): np.kron(Z, I2), (0, 2): np.kron(Y, I2), (1, 2): np.kron(X, I2)}
    swaps = {(0, 1): np.kron(S_GATE, S_GATE), (0, 2): np.kron(opcore.H, opcore.H), (1, 2): np.kron(Q_GATE, Q_GATE)}

    def shift(j, steps):
        # exp(i (c + s pi/2) PP) = (i PP)^s exp(i c PP)
        nonlocal k1
        k1 = k1 @ np.linalg.matrix_power(1j * np.kron(sigmas[j], sigmas[j]), steps)
        c[j] -= steps * math.pi / 2

    def flip(i, j):
        nonlocal k1, k2
        f = flips[(i, j)]
        k1, k2 = k1 @ f, f @ k2
        c[i], c[j] = -c[i], -c[j]

    def swap(i, j):
        nonlocal k1, k2
        v = swaps[(i, j)]
        k1, k2 = k1 @ v.conj().T, v @ k2
        c[i], c[j] = c[j], c[i]

    for j in range(3):
        while c[j] > math.pi / 4 + eps:
            shift(j, 1)
        while c[j] <= -math.pi / 4 + eps:
            shift(j, -1)
    for i, j in ((0, 1), (1, 2), (0, 1)):
        if abs(c[i]) + eps < abs(c[j]):
            swap(i, j)
    if c[0] < -eps and c[1] < -eps:
        flip(0, 1)
    elif c[0] < -eps:
        flip(0, 2)
    elif c[1] < -eps:
        flip(1, 2)
    if abs(c[0] - math.pi / 4) <= 1e-10 and c[2] < -eps:
        shift(0, 1)
        flip(0, 2)
    c = [0.0 if abs(v) <= eps else v for v in c]
    return k1, tuple(c), k2


def kak_su4(u, rng: np.random.Generator | None = None, tol: float = 1e-8) -> KakFactors:
    """Two-qubit KAK factorization via the magic basis.

    In the magic basis local gates are real orthogonal and the canonical
    gates are diagonal, so diagonalizing ``U^T U`` there exposes both.  The
    parameters are then moved into the chamber
    ``pi/4 >= c_x >= c_y >= |c_z|`` (with ``c_z >= 0`` when ``c_x = pi/4``)
    by shifts of ``pi/2``, sign flips of two parameters and permutations,
    each paired with a compensating local gate.

    Raises:
        KakError: ``u`` is not a 4x4 unitary.
    """
    u = as_array(u)
    if u.shape != (4, 4) or not opcore.is_unitary(u, tol):
        raise KakError("kak_su4 needs a 4x4 unitary")
    rng = rng or np.random.default_rng(0)
    det = np.linalg.det(u)
    su = u / det**0.25
    up = MAGIC.conj().T @ su @ MAGIC
    p = _real_orthogonal_diagonalizer(up.T @ up, rng, tol)
    if np.linalg.det(p) < 0:
        p[:, 0] = -p[:, 0]
    theta = np.angle(np.diag(p.T @ up.T @ up @ p)) / 2
    k1m = up @ p @ np.diag(np.exp(-1j * theta))
    if np.real(np.linalg.det(k1m)) < 0:
        theta[0] += math.pi
        k1m = up @ p @ np.diag(np.exp(-1j * theta))
    sol = np.linalg.solve(_MAGIC_SIGNS, theta)
    c, phi = sol[:3], sol[3]
    k1 = MAGIC @ k1m @ MAGIC.conj().T
    k2 = MAGIC @ p.T @ MAGIC.conj().T
    k1, c, k2 = _reduce_chamber(k1, c, k2)
    factors = KakFactors(k1, k2, c)
    v = factors.k1 @ canonical_gate(c) @ factors.k2
    overlap = np.trace(v.conj().T @ u)
    return KakFactors(k1, k2, c, overlap / abs(overlap))


def haar_su4(n: int, seed: int = 0) -> list[np.ndarray]:
    """``n`` Haar-random SU(4) matrices."""
    from scipy.stats import unitary_group

    mats = unitary_group.rvs(4, size=n, random_state=seed)
    mats = mats.reshape(-1, 4, 4)
    return [m / np.linalg.det(m) ** 0.25 for m in mats]


# --- alignment and qubit counting ----------------------------------------------

@dataclass(frozen=True)
class AlignmentReport:
    containment_residuals: tuple
    """Per game: Hilbert-Schmidt norm of the part of the conjugated algebra outside the target."""
    effective_rank: int
    target_abelian_residual: float
    cross_bracket_residual: float
    """Largest bracket between different target components (0 with one component)."""
    target_dim: int
    tol: float

    @property
    def aligned(self) -> bool:
        return (max(self.containment_residuals, default=0.0) <= self.tol
                and self.target_abelian_residual <= self.tol
                and self.cross_bracket_residual <= self.tol)


def check_alignment(game_algebras: Sequence[LieBasis], conjugators: Sequence, target,
                    tol: float = DEFAULT_TOL) -> AlignmentReport:
    """Do the conjugated game algebras of one player sit in an abelian target?

    ``target`` is a :class:`LieBasis` or a sequence of them (for instance a
    centralizer part and the ``a`` part); their brackets with each other are
    reported separately.  The effective rank is the dimension of the span of
    all conjugated algebras together.
    """
    parts = [target] if isinstance(target, LieBasis) else list(target)
    if not parts:
        raise ValueError("empty target")
    dim = parts[0].dim_hilbert
    merged = span_basis([b for part in parts for b in part.basis], dim)
    images = [adjoint_conjugate(k, g) for k, g in zip(conjugators, game_algebras, strict=True)]
    residuals = []
    for img in images:
        total = sum(merged.residual(b) ** 2 for b in img.basis)
        residuals.append(math.sqrt(total))
    cross = max((max_bracket(p, q) for p, q in itertools.combinations(parts, 2)), default=0.0)
    return AlignmentReport(tuple(residuals), span_rank(images), max_bracket(merged), cross, merged.dim, tol)


def qubit_bound(r_a: int, r_b: int) -> int:
    """Least ``m`` with ``2^m - 1 >= max(r_a, r_b)``."""
    if r_a < 0 or r_b < 0:
        raise ValueError("ranks must be non-negative")
    r = max(r_a, r_b)
    m = 0
    while 2**m - 1 < r:
        m += 1
    return m


@dataclass(frozen=True)
class QubitReport:
    n: int
    N: int
    r: int
    capacity: int
    """``sum_i (2^{n_i} - 1)``."""

    @property
    def strict(self) -> bool:
        return self.r < self.capacity

    @property
    def non_strict(self) -> bool:
        return self.r <= self.capacity

    @property
    def reduces(self) -> bool:
        return self.n < self.N

    def to_json(self) -> dict:
        return {"n": self.n, "N": self.N, "r": self.r, "capacity": self.capacity,
                "r_lt_capacity": self.strict, "r_le_capacity": self.non_strict, "n_lt_N": self.reduces}


def qubit_report(r_a: int, r_b: int, qubits: Sequence[int]) -> QubitReport:
    return QubitReport(qubit_bound(r_a, r_b), sum(qubits), max(r_a, r_b), sum(2**n - 1 for n in qubits))
