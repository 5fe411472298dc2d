"""Acceptance operators, common winning sectors and compression certificates.

The control-register construction gives every player a data register of
``max n_i`` qubits and a control register of ``ceil(log2 K)`` qubits.  Game
``i`` uses its own measurements on control block ``|i>`` and an "offline"
family on every other block.  A certificate stores the resulting operators
and state together with every residual, and :func:`verify_certificate`
recomputes all of them from the stored operators alone.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import opcore
from .composer import NotPerfectError, _unitary_factor, product_state
from .games import BudgetExceeded, Game, _freeze, _thaw, classical_value, make_game
from .liecart import lie_closure, qubit_report, span_rank, strategy_generators
from .opcore import DEFAULT_TOL, NonCommutingError, StateVector, frob
from .strategies import QuantumStrategy, StrategyError, _family_from_json, _family_to_json, evaluate

OFFLINE_CHOICES = ("scalar-uniform", "scalar-deterministic", "copy-active")
CERT_VERSION = 1
CONSISTENCY_TOL = 1e-12


class CertificateError(ValueError):
    """Certificate file is malformed."""


class PipelineError(ValueError):
    """The compression pipeline cannot run on these inputs."""


# --- acceptance operators -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AcceptanceOperator:
    question: tuple
    op: np.ndarray = field(repr=False)
    game_index: int = 0


def _families(strat_or_povms):
    if isinstance(strat_or_povms, QuantumStrategy):
        return strat_or_povms.povms_a, strat_or_povms.povms_b
    povms_a, povms_b = strat_or_povms
    return povms_a, povms_b


def acceptance_operator(game: Game, strat_or_povms, question, game_index: int = 0,
                        tol: float = DEFAULT_TOL) -> AcceptanceOperator:
    """``W(x, y) = sum over accepted (a, b) of M_xa (x) N_yb``.

    ``strat_or_povms`` is a strategy or a ``(povms_a, povms_b)`` pair.

    Raises:
        StrategyError: an outcome is outside the game's alphabet, or the
            result is not between 0 and 1.
    """
    povms_a, povms_b = _families(strat_or_povms)
    x, y = (_freeze(q) for q in question)
    fam_a, fam_b = povms_a[x], povms_b[y]
    for labels, alphabet, who in ((fam_a, game.outputs_a, "Alice"), (fam_b, game.outputs_b, "Bob")):
        extra = [a for a in labels if a not in set(alphabet)]
        if extra:
            raise StrategyError(f"{who}'s outcomes {extra!r} are not in the alphabet of {game.name!r}")
    da = next(iter(fam_a.values())).shape[0]
    db = next(iter(fam_b.values())).shape[0]
    w = np.zeros((da * db, da * db), dtype=complex)
    for a, b in game.accepted_pairs(x, y):
        if a in fam_a and b in fam_b:
            w += np.kron(fam_a[a], fam_b[b])
    if not opcore.is_hermitian(w, tol):
        raise StrategyError("acceptance operator is not Hermitian")
    eig = np.linalg.eigvalsh((w + w.conj().T) / 2)
    if eig[0] < -tol or eig[-1] > 1 + tol:
        raise StrategyError(f"acceptance operator spectrum [{eig[0]:.3e}, {eig[-1]:.3e}] leaves [0, 1]")
    return AcceptanceOperator((x, y), w, game_index)


def acceptance_operators(game: Game, strat_or_povms, game_index: int = 0,
                         tol: float = DEFAULT_TOL) -> list[AcceptanceOperator]:
    return [acceptance_operator(game, strat_or_povms, q, game_index, tol) for q in game.questions()]


def embed_on_factors(op, dims_a: Sequence[int], dims_b: Sequence[int], i: int) -> np.ndarray:
    """Place an operator on ``A_i (x) B_i`` into the ``(A_1..A_K) (x) (B_1..B_K)`` layout."""
    k = len(dims_a)
    rest = [np.eye(dims_a[j] * dims_b[j]) for j in range(k)]
    rest[i] = np.asarray(op)
    full = opcore.kron(*rest)
    dims = [d for pair in zip(dims_a, dims_b) for d in pair]
    perm = [2 * j for j in range(k)] + [2 * j + 1 for j in range(k)]
    return opcore.permute_subsystems(full, dims, perm)


def product_acceptance_operators(games: Sequence[Game], strats: Sequence[QuantumStrategy],
                                 tol: float = DEFAULT_TOL) -> list[AcceptanceOperator]:
    """Every game's acceptance operators acting on its own factors of the product space."""
    dims_a = [s.dim_a for s in strats]
    dims_b = [s.dim_b for s in strats]
    out = []
    for i, (g, s) in enumerate(zip(games, strats)):
        for w in acceptance_operators(g, s, i, tol):
            out.append(AcceptanceOperator(w.question, embed_on_factors(w.op, dims_a, dims_b, i), i))
    return out


# --- common winning sector --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CwsResult:
    """Accepted sector of a commuting family of acceptance operators.

    In product mode ``basis_a``/``basis_b`` hold local eigenbases (columns)
    and ``accepted_indices`` are pairs ``(j, l)``.  Otherwise ``joint_basis``
    holds joint eigenvectors and ``accepted_indices`` are single indices.
    """

    accepted_indices: tuple
    basis_a: np.ndarray | None = field(default=None, repr=False)
    basis_b: np.ndarray | None = field(default=None, repr=False)
    joint_basis: np.ndarray | None = field(default=None, repr=False)
    cws_state: np.ndarray | None = field(default=None, repr=False)
    max_commutator: float = 0.0

    @property
    def empty(self) -> bool:
        return not self.accepted_indices

    @property
    def product_mode(self) -> bool:
        return self.basis_a is not None


def _ops(acceptance_ops) -> list[np.ndarray]:
    return [w.op if isinstance(w, AcceptanceOperator) else opcore.as_array(w) for w in acceptance_ops]


def pair_state(basis_a: np.ndarray, basis_b: np.ndarray, pairs: Sequence[tuple]) -> np.ndarray:
    """Uniform superposition of ``|e_j> (x) |f_l>`` over the given pairs."""
    psi = sum(np.kron(basis_a[:, j], basis_b[:, l]) for j, l in pairs)
    return psi / math.sqrt(len(pairs))


def common_winning_sector(acceptance_ops, tol: float = DEFAULT_TOL, dims: tuple[int, int] | None = None,
                          local_bases: tuple | None = None,
                          rng: np.random.Generator | None = None) -> CwsResult:
    """Indices whose basis vectors every operator accepts with eigenvalue 1.

    With ``dims`` the operators are tried in a product basis, either the
    given ``local_bases`` or the computational one; when all of them are
    diagonal there the sector is a set of index pairs.  Otherwise a joint
    eigenbasis is used.  The state is the uniform superposition over the
    sector (``None`` when it is empty).

    Raises:
        NonCommutingError: the operators do not commute within ``tol``.
    """
    mats = _ops(acceptance_ops)
    if not mats:
        raise ValueError("need at least one acceptance operator")
    worst = opcore.max_pairwise_commutator(mats)
    if worst > tol:
        raise NonCommutingError(f"acceptance operators do not commute (max commutator norm {worst:.3e})", worst)

    if dims is not None:
        da, db = dims
        if local_bases is None:
            ba, bb = np.eye(da, dtype=complex), np.eye(db, dtype=complex)
        else:
            ba, bb = (opcore.as_array(b) for b in local_bases)
        basis = np.kron(ba, bb)
        rotated = [basis.conj().T @ m @ basis for m in mats]
        if all(frob(r - np.diag(np.diag(r))) <= tol for r in rotated):
            diag = np.real(np.stack([np.diag(r) for r in rotated]))
            ok = np.all(np.abs(diag - 1) <= tol, axis=0)
            pairs = tuple(divmod(int(k), db) for k in np.flatnonzero(ok))
            state = pair_state(ba, bb, pairs) if pairs else None
            return CwsResult(pairs, ba, bb, None, state, worst)
        if local_bases is not None:
            raise ValueError("acceptance operators are not diagonal in the given product basis")

    vecs, diags = opcore.simultaneous_diag(mats, tol, rng)
    ok = np.all(np.abs(np.stack(diags) - 1) <= tol, axis=0)
    idx = tuple(int(k) for k in np.flatnonzero(ok))
    state = None
    if idx:
        state = vecs[:, list(idx)].sum(axis=1) / math.sqrt(len(idx))
    return CwsResult(idx, None, None, vecs, state, worst)


@dataclass(frozen=True)
class CwsStateReport:
    product_expectation: float
    """Real part of ``<Psi| prod_i W_i |Psi>``."""
    residuals: tuple
    """``||W |Psi> - |Psi>||`` per operator."""
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    @property
    def passed(self) -> bool:
        return abs(self.product_expectation - 1) <= self.tol


def verify_cws_state(state, acceptance_ops, tol: float = DEFAULT_TOL) -> CwsStateReport:
    psi = opcore.as_array(state).reshape(-1)
    mats = _ops(acceptance_ops)
    residuals = tuple(float(np.linalg.norm(m @ psi - psi)) for m in mats)
    vec = psi
    for m in reversed(mats):
        vec = m @ vec
    return CwsStateReport(float(np.real(np.vdot(psi, vec))), residuals, tol)


# --- control-register embedding --------------------------------------------------

@dataclass(frozen=True, eq=False)
class ControlEmbedding:
    """Per player: data register (x) control register, data first.

    ``povms_a[i][x][a]`` is game ``i``'s embedded element; ``offline_povms_a``
    holds the data-register families used on the blocks where game ``i`` is
    not active.
    """

    games: tuple
    data_qubits: int
    control_qubits: int
    active_block: tuple
    offline_choice: str
    offline_povms_a: tuple = field(repr=False)
    offline_povms_b: tuple = field(repr=False)
    povms_a: tuple = field(repr=False)
    povms_b: tuple = field(repr=False)
    state: np.ndarray = field(repr=False)

    @property
    def n_compressed(self) -> int:
        return self.data_qubits + self.control_qubits

    @property
    def dim(self) -> int:
        return 2**self.n_compressed

    def layout(self) -> dict:
        return {"data_qubits": self.data_qubits, "control_qubits": self.control_qubits,
                "active_block": list(self.active_block)}


def _pad(m: np.ndarray, dim: int) -> np.ndarray:
    return np.kron(m, np.eye(dim // m.shape[0]))


def _offline_family(choice: str, fam: Mapping, data_dim: int, answer=None) -> dict:
    eye = np.eye(data_dim, dtype=complex)
    if choice == "scalar-uniform":
        return {a: eye / len(fam) for a in fam}
    if choice == "scalar-deterministic":
        out = {a: np.zeros_like(eye) for a in fam}
        out[answer] = eye
        return out
    if choice == "copy-active":
        return {a: _pad(m, data_dim) for a, m in fam.items()}
    raise ValueError(f"unknown offline choice {choice!r}; choose from {', '.join(OFFLINE_CHOICES)}")


def _deterministic_answers(game: Game):
    try:
        cv = classical_value(game)
    except BudgetExceeded:
        cv = classical_value(game, sample=20000)
    return cv.strategy


def build_control_embedding(games: Sequence[Game], strats: Sequence[QuantumStrategy],
                            offline_choice: str = "scalar-uniform", control_qubits: int | None = None,
                            tol: float = DEFAULT_TOL) -> ControlEmbedding:
    """Commuting-embedding candidate on ``max n_i + ceil(log2 K)`` qubits per player.

    The shared state is ``|Phi>`` on the data registers times ``|Phi>`` on
    the control registers, so both players always read the same block.
    Smaller games are padded with identities, and a game whose state is
    ``(1 (x) V)|Phi>`` has Bob's operators conjugated by ``V``.

    Raises:
        PipelineError: fewer than two games, or too few control qubits.
        NotPerfectError: some strategy is not perfect.
    """
    games, strats = tuple(games), tuple(strats)
    k = len(games)
    if k < 2:
        raise PipelineError("compression needs at least two games")
    if len(strats) != k:
        raise PipelineError(f"{k} games but {len(strats)} strategies")
    if offline_choice not in OFFLINE_CHOICES:
        raise ValueError(f"unknown offline choice {offline_choice!r}; choose from {', '.join(OFFLINE_CHOICES)}")
    for g, s in zip(games, strats):
        if not evaluate(g, s, tol).perfect:
            raise NotPerfectError(f"strategy for {g.name!r} is not perfect")
    needed = math.ceil(math.log2(k))
    c = needed if control_qubits is None else control_qubits
    if 2**c < k:
        raise PipelineError(f"{c} control qubits hold at most {2**c} games, got {k}")
    nd = max(s.qubits_a for s in strats)
    data, ctrl = 2**nd, 2**c
    blocks = [np.outer(opcore.basis_state(b, ctrl), opcore.basis_state(b, ctrl).conj()) for b in range(ctrl)]

    off_a, off_b, emb_a, emb_b = [], [], [], []
    for i, (g, s) in enumerate(zip(games, strats)):
        v = _unitary_factor(s, tol)
        fam_b = {y: {b: v.conj().T @ n @ v for b, n in fam.items()} for y, fam in s.povms_b.items()}
        answers = _deterministic_answers(g) if offline_choice == "scalar-deterministic" else None
        for fam_src, off, emb, side in ((s.povms_a, off_a, emb_a, "a"), (fam_b, off_b, emb_b, "b")):
            offline, embedded = {}, {}
            for q, fam in fam_src.items():
                answer = None if answers is None else (answers.f if side == "a" else answers.g)[q]
                o = _offline_family(offline_choice, fam, data, answer)
                labels = list(fam) + [a for a in o if a not in fam]
                zero = np.zeros((data, data), dtype=complex)
                embedded[q] = {
                    a: sum(np.kron(_pad(fam[a], data) if a in fam else zero, blocks[b]) if b == i
                           else np.kron(o.get(a, zero), blocks[b]) for b in range(ctrl))
                    for a in labels
                }
                offline[q] = o
            off.append(offline)
            emb.append(embedded)

    state = product_state([opcore.max_entangled(data), opcore.max_entangled(ctrl)], [data, ctrl], [data, ctrl])
    return ControlEmbedding(games, nd, c, tuple(range(k)), offline_choice, tuple(off_a), tuple(off_b),
                            tuple(emb_a), tuple(emb_b), state)


# --- checks ------------------------------------------------------------------------

def _acceptance_matrix(game: Game, fam_a: Mapping, fam_b: Mapping, x, y, dim: int) -> np.ndarray:
    w = np.zeros((dim * dim, dim * dim), dtype=complex)
    for a, b in game.accepted_pairs(x, y):
        if a in fam_a and b in fam_b:
            w += np.kron(fam_a[a], fam_b[b])
    return w


def _block(m: np.ndarray, data: int, ctrl: int, b: int, b2: int | None = None) -> np.ndarray:
    b2 = b if b2 is None else b2
    return m.reshape(data, ctrl, data, ctrl)[:, b, :, b2]


def compute_checks(games: Sequence[Game], povms_a: Sequence[Mapping], povms_b: Sequence[Mapping],
                   state: np.ndarray, dim: int, layout: Mapping | None, n_compressed: int,
                   n_baseline: int, tol: float = DEFAULT_TOL) -> tuple[dict, dict]:
    """Every residual of a compression claim, from raw operators only.

    Returns ``(checks, diagnostics)``; ``checks`` decides ``overall_pass``.
    """
    k = len(games)
    psi = np.asarray(state).reshape(-1)

    completeness, herm, min_eig, valid = 0.0, 0.0, 0.0, True
    for fams in (povms_a, povms_b):
        for fam_q in fams:
            for fam in fam_q.values():
                chk = opcore.is_povm(list(fam.values()), tol)
                valid &= chk.ok
                completeness = max(completeness, chk.completeness)
                herm = max(herm, chk.hermiticity)
                min_eig = min(min_eig, chk.min_eigenvalue)

    cross = 0.0
    for i, j in itertools.combinations(range(k), 2):
        for fams in (povms_a, povms_b):
            els_i = [m for fam in fams[i].values() for m in fam.values()]
            els_j = [m for fam in fams[j].values() for m in fam.values()]
            for m in els_i:
                for n in els_j:
                    cross = max(cross, frob(m @ n - n @ m))

    per_question, fixed, ws = [], 0.0, []
    for i, g in enumerate(games):
        wi = []
        for x, y in g.questions():
            w = _acceptance_matrix(g, povms_a[i][x], povms_b[i][y], x, y, dim)
            wpsi = w @ psi
            per_question.append([i, _thaw(x), _thaw(y), float(np.real(np.vdot(psi, wpsi)))])
            fixed = max(fixed, float(np.linalg.norm(wpsi - psi)))
            wi.append(w)
        ws.append(wi)

    # <Psi| W_1 ... W_K |Psi> over all question tuples, applying W_K first
    joint_min = math.inf

    def descend(depth, vec):
        nonlocal joint_min
        if depth < 0:
            joint_min = min(joint_min, float(np.real(np.vdot(psi, vec))))
            return
        for w in ws[depth]:
            descend(depth - 1, w @ vec)

    descend(k - 1, psi)

    offline = None
    diagnostics = {"completeness_max": completeness, "hermiticity_max": herm, "min_eigenvalue": min_eig}
    if layout is not None:
        data, ctrl = 2 ** layout["data_qubits"], 2 ** layout["control_qubits"]
        if data * ctrl != dim:
            raise CertificateError("layout does not match the operator dimension")
        offline, off_block = 0.0, 0.0
        eye = np.eye(data * data)
        for i, g in enumerate(games):
            active = layout["active_block"][i]
            for x, y in g.questions():
                fa, fb = povms_a[i][x], povms_b[i][y]
                for b in range(ctrl):
                    if b == active:
                        continue
                    xa = {a: _block(m, data, ctrl, b) for a, m in fa.items()}
                    yb = {l: _block(m, data, ctrl, b) for l, m in fb.items()}
                    offline = max(offline, frob(_acceptance_matrix(g, xa, yb, x, y, data) - eye))
        for fams in (povms_a, povms_b):
            for fam_q in fams:
                for fam in fam_q.values():
                    for m in fam.values():
                        t = m.reshape(data, ctrl, data, ctrl).copy()
                        for b in range(ctrl):
                            t[:, b, :, b] = 0
                        off_block = max(off_block, frob(t.reshape(dim, dim)))
        t = psi.reshape(data, ctrl, data, ctrl).copy()
        for b in range(ctrl):
            t[:, b, :, b] = 0
        cross_blocks = 0.0
        for wi in ws:
            for w in wi:
                t8 = w.reshape(data, ctrl, data, ctrl, data, ctrl, data, ctrl)
                total = sum(frob(t8[:, b, :, b2, :, b, :, b2]) ** 2
                            for b in range(ctrl) for b2 in range(ctrl) if b != b2)
                cross_blocks = max(cross_blocks, math.sqrt(total))
        diagnostics.update({
            "block_offdiagonal_max": off_block,
            "control_correlation_residual": float(np.linalg.norm(t)),
            "uncorrelated_block_norm_max": cross_blocks,
        })

    min_acc = min(p for *_, p in per_question)
    checks = {
        "povm_validity": bool(valid),
        "cross_game_commutation_residual": cross,
        "offline_identity_residual": offline,
        "min_acceptance": min_acc,
        "fixed_point_max": fixed,
        "joint_acceptance_min": joint_min,
        "n_compressed_lt_n_baseline": n_compressed < n_baseline,
        "per_question_acceptance": per_question,
    }
    checks["overall_pass"] = bool(
        valid and cross <= tol and (offline is None or offline <= tol)
        and min_acc >= 1 - tol and fixed <= tol and joint_min >= 1 - tol and n_compressed < n_baseline)
    return checks, diagnostics


def _game_povms_json(fams: Sequence[Mapping]) -> list:
    return [_family_to_json(f) for f in fams]


def _certificate(games, povms_a, povms_b, state, dim, layout, n_compressed, n_baseline, tol, extra=None) -> dict:
    checks, diagnostics = compute_checks(games, povms_a, povms_b, state, dim, layout, n_compressed, n_baseline, tol)
    cert = {
        "version": CERT_VERSION,
        "game_names": [g.name for g in games],
        "games": [g.to_json() for g in games],
        "n_compressed": n_compressed,
        "n_baseline": n_baseline,
        "dim": dim,
        "shared_state": StateVector(state).to_json(),
        "embedded_povms": {"a": _game_povms_json(povms_a), "b": _game_povms_json(povms_b)},
        "layout": layout,
        "checks": checks,
        "diagnostics": diagnostics,
        "tolerance": tol,
    }
    if extra:
        cert.update(extra)
    return cert


def embedding_certificate(emb: ControlEmbedding, n_baseline: int, tol: float = DEFAULT_TOL) -> dict:
    return _certificate(emb.games, emb.povms_a, emb.povms_b, emb.state, emb.dim, emb.layout(),
                        emb.n_compressed, n_baseline, tol, {"offline_choice": emb.offline_choice})


def tensor_certificate(games: Sequence[Game], strats: Sequence[QuantumStrategy],
                       tol: float = DEFAULT_TOL) -> dict:
    """The parallel-play strategy packaged as a (non-)compression certificate."""
    games, strats = tuple(games), tuple(strats)
    dims_a = [s.dim_a for s in strats]
    dims_b = [s.dim_b for s in strats]
    if dims_a != dims_b:
        raise PipelineError("certificates need equal local dimensions per game")
    povms_a, povms_b = [], []
    for i, s in enumerate(strats):
        for fams, src, dims in ((povms_a, s.povms_a, dims_a), (povms_b, s.povms_b, dims_b)):
            fams.append({q: {a: opcore.kron(*[m if j == i else np.eye(d) for j, d in enumerate(dims)])
                             for a, m in fam.items()} for q, fam in src.items()})
    state = product_state([s.state for s in strats], dims_a, dims_b)
    n = sum(s.qubits_a for s in strats)
    return _certificate(games, povms_a, povms_b, state, math.prod(dims_a), None, n, n, tol,
                        {"offline_choice": None})


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    consistent: bool
    overall_pass: bool
    recomputed: dict
    mismatches: tuple
    """Names of stored checks that disagree with the recomputation."""
    diagnostics: dict = field(default_factory=dict)


def _parse_certificate(cert: Mapping):
    try:
        if cert["version"] != CERT_VERSION:
            raise CertificateError(f"unsupported certificate version {cert['version']!r}")
        games = [make_game(g) for g in cert["games"]]
        povms_a = [_family_from_json(f) for f in cert["embedded_povms"]["a"]]
        povms_b = [_family_from_json(f) for f in cert["embedded_povms"]["b"]]
        state = StateVector.from_json(cert["shared_state"]).array
        n_c, n_b = int(cert["n_compressed"]), int(cert["n_baseline"])
        layout = cert.get("layout")
        tol = float(cert.get("tolerance", DEFAULT_TOL))
    except CertificateError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CertificateError(f"malformed certificate: {exc}") from None
    if len(povms_a) != len(games) or len(povms_b) != len(games):
        raise CertificateError("one POVM collection per game and player is required")
    dim = 2**n_c
    if state.shape != (dim * dim,):
        raise CertificateError(f"state has {state.shape[0]} amplitudes, expected {dim * dim} for {n_c} qubits")
    for fams in (povms_a, povms_b):
        for i, (g, fam_q) in enumerate(zip(games, fams)):
            for q in (g.inputs_a if fams is povms_a else g.inputs_b):
                if q not in fam_q:
                    raise CertificateError(f"game {i} has no measurement for question {q!r}")
            for fam in fam_q.values():
                for m in fam.values():
                    if m.shape != (dim, dim):
                        raise CertificateError(f"operator of shape {m.shape} in a {dim}-dimensional certificate")
    return games, povms_a, povms_b, state, dim, layout, n_c, n_b, tol


def _same(stored, fresh) -> bool:
    if isinstance(fresh, bool) or fresh is None:
        return stored == fresh
    if isinstance(fresh, float):
        return isinstance(stored, (int, float)) and not isinstance(stored, bool) and (
            stored == fresh or abs(stored - fresh) <= CONSISTENCY_TOL)
    if isinstance(fresh, list):
        return isinstance(stored, list) and len(stored) == len(fresh) and all(
            _same(s, f) for s, f in zip(stored, fresh))
    return stored == fresh


def verify_certificate(cert: Mapping, tol: float | None = None) -> VerificationReport:
    """Recompute every check from the stored operators and compare.

    The certificate passes when the recomputation agrees with every stored
    check and the recomputed verdict is a pass.

    Raises:
        CertificateError: the file is structurally malformed.
    """
    games, povms_a, povms_b, state, dim, layout, n_c, n_b, stored_tol = _parse_certificate(cert)
    tol = stored_tol if tol is None else tol
    fresh, diagnostics = compute_checks(games, povms_a, povms_b, state, dim, layout, n_c, n_b, tol)
    stored = cert.get("checks", {})
    mismatches = tuple(name for name, value in fresh.items()
                       if name not in stored or not _same(stored[name], value))
    consistent = not mismatches
    return VerificationReport(consistent and fresh["overall_pass"], consistent, fresh["overall_pass"],
                              fresh, mismatches, diagnostics)


def load_certificate(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise CertificateError(f"{path} is not valid JSON: {exc}") from None


# --- pipeline --------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineResult:
    certificate: dict
    steps: tuple
    """``(name, outcome)`` per step, in execution order."""

    @property
    def passed(self) -> bool:
        return bool(self.certificate["checks"]["overall_pass"])


def run_pipeline(games: Sequence[Game], strats: Sequence[QuantumStrategy],
                 offline_choice: str = "scalar-uniform", tol: float = DEFAULT_TOL,
                 rng: np.random.Generator | None = None) -> PipelineResult:
    """Run the compression steps in order and record each outcome.

    The steps are: baseline qubit count, Lie closures of each player's game
    algebras, effective ranks and the Lie-theoretic qubit count, the
    control-register embedding with its checks, and the common winning
    sector of the embedded acceptance operators.

    Raises:
        PipelineError: fewer than two games.
    """
    games, strats = tuple(games), tuple(strats)
    if len(games) < 2:
        raise PipelineError("compression needs at least two games")
    steps = []
    qubits = [s.qubits_a for s in strats]
    n_baseline = sum(qubits)
    steps.append(("baseline", {"N": n_baseline, "qubits": qubits}))

    closures = []
    for g, s in zip(games, strats):
        la = lie_closure(strategy_generators(s, "a"))
        lb = lie_closure(strategy_generators(s, "b"))
        closures.append({"game": g.name, "dim_a": la.dim, "dim_b": lb.dim,
                         "full_su_a": la.dim == s.dim_a**2 - 1, "full_su_b": lb.dim == s.dim_b**2 - 1})
    steps.append(("lie_closures", closures))

    emb = build_control_embedding(games, strats, offline_choice, tol=tol)
    ranks = {}
    for side, fams in (("a", emb.povms_a), ("b", emb.povms_b)):
        algebras = [lie_closure([m for fam in f.values() for m in fam.values()]) for f in fams]
        ranks[side] = {"r": span_rank(algebras), "per_game": [a.dim for a in algebras]}
    qr = qubit_report(ranks["a"]["r"], ranks["b"]["r"], qubits)
    steps.append(("effective_ranks", {"r_A": ranks["a"]["r"], "r_B": ranks["b"]["r"],
                                      "per_game_A": ranks["a"]["per_game"], "per_game_B": ranks["b"]["per_game"]}))
    steps.append(("qubit_bound", qr.to_json()))
    steps.append(("embedding", {**emb.layout(), "offline_choice": offline_choice,
                                "n_construction": emb.n_compressed, "n_lie": qr.n,
                                "agree": emb.n_compressed == qr.n}))

    cert = embedding_certificate(emb, n_baseline, tol)
    checks = cert["checks"]
    steps.append(("commutativity", {"cross_game_commutation_residual": checks["cross_game_commutation_residual"],
                                    "holds": checks["cross_game_commutation_residual"] <= tol}))

    ops = [AcceptanceOperator((x, y), _acceptance_matrix(g, emb.povms_a[i][x], emb.povms_b[i][y], x, y, emb.dim), i)
           for i, g in enumerate(games) for x, y in g.questions()]
    try:
        cws = common_winning_sector(ops, tol, rng=rng)
        outcome = {"accepted": len(cws.accepted_indices), "empty": cws.empty}
        if cws.empty:
            outcome["status"] = "no certificate state from the common winning sector"
        else:
            outcome["state_check"] = verify_cws_state(cws.cws_state, ops, tol).passed
    except NonCommutingError as exc:
        outcome = {"error": str(exc), "max_commutator": exc.max_norm}
    except ArithmeticError as exc:
        outcome = {"error": str(exc)}
    steps.append(("common_winning_sector", outcome))
    steps.append(("state", {"fixed_point_max": checks["fixed_point_max"],
                            "joint_acceptance_min": checks["joint_acceptance_min"]}))
    steps.append(("reduction", {"n_compressed": emb.n_compressed, "n_baseline": n_baseline,
                                "holds": emb.n_compressed < n_baseline}))
    cert["pipeline"] = [{"step": name, "outcome": out} for name, out in steps]
    return PipelineResult(cert, tuple(steps))
