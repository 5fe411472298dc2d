"""Quantum strategies: shared state plus one POVM family per question."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import opcore
from .games import (
    ClassicalStrategy,
    Game,
    MerminStar,
    ObservableSquare,
    _freeze,
    _thaw,
    standard_square,
)
from .opcore import DEFAULT_TOL, Operator, StateVector, as_array, frob, is_povm


class StrategyError(ValueError):
    """Strategy is malformed or does not fit the game."""


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    """Shared state ``|psi>`` on ``C^dim_a (x) C^dim_b`` (Alice first) and POVMs.

    ``povms_a[x][a]`` is Alice's element for outcome ``a`` on question ``x``;
    outcomes absent from a family are zero operators.
    """

    dim_a: int
    dim_b: int
    state: np.ndarray = field(repr=False)
    povms_a: Mapping = field(repr=False)
    povms_b: Mapping = field(repr=False)
    tol: float = DEFAULT_TOL
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        state = np.array(as_array(self.state)).reshape(-1)
        if state.shape != (self.dim_a * self.dim_b,):
            raise StrategyError(f"state has {state.shape[0]} amplitudes, expected {self.dim_a * self.dim_b}")
        if abs(np.linalg.norm(state) - 1) > 1e-12:
            raise StrategyError("state is not normalized")
        state.setflags(write=False)
        object.__setattr__(self, "state", state)
        if self.validate:
            object.__setattr__(self, "povms_a", _freeze_family(self.povms_a, self.dim_a, self.tol, "Alice"))
            object.__setattr__(self, "povms_b", _freeze_family(self.povms_b, self.dim_b, self.tol, "Bob"))

    @property
    def qubits_a(self) -> int:
        return opcore.check_dims_power_of_two(self.dim_a)

    @property
    def qubits_b(self) -> int:
        return opcore.check_dims_power_of_two(self.dim_b)

    def family_a(self, x) -> Mapping:
        try:
            return self.povms_a[_freeze(x)]
        except KeyError:
            raise StrategyError(f"Alice has no measurement for question {x!r}") from None

    def family_b(self, y) -> Mapping:
        try:
            return self.povms_b[_freeze(y)]
        except KeyError:
            raise StrategyError(f"Bob has no measurement for question {y!r}") from None

    def answer_distribution(self, x, y) -> dict[tuple, float]:
        """``p(a, b | x, y)`` for every outcome pair in the two families."""
        fam_a, fam_b = self.family_a(x), self.family_b(y)
        labels_a, labels_b = list(fam_a), list(fam_b)
        probs = _joint_probabilities(self.state, self.dim_a, self.dim_b,
                                     [fam_a[a] for a in labels_a], [fam_b[b] for b in labels_b])
        return {(a, b): float(probs[i, j]) for i, a in enumerate(labels_a) for j, b in enumerate(labels_b)}

    def acceptance_table(self, game: Game) -> dict[tuple, float]:
        """Raw winning probability for every question pair of ``game``."""
        check_alphabets(game, self)
        table = {}
        for x, y in game.questions():
            dist = self.answer_distribution(x, y)
            table[(x, y)] = float(sum(p for (a, b), p in dist.items() if game.accepts(x, y, a, b)))
        return table

    def to_json(self) -> dict:
        return {
            "dim_a": self.dim_a,
            "dim_b": self.dim_b,
            "state": StateVector(self.state).to_json(),
            "povms_a": _family_to_json(self.povms_a),
            "povms_b": _family_to_json(self.povms_b),
        }

    @classmethod
    def from_json(cls, data: Mapping, tol: float = DEFAULT_TOL) -> "QuantumStrategy":
        try:
            return cls(
                data["dim_a"], data["dim_b"],
                StateVector.from_json(data["state"]).array,
                _family_from_json(data["povms_a"]),
                _family_from_json(data["povms_b"]),
                tol=tol,
            )
        except KeyError as exc:
            raise StrategyError(f"strategy JSON is missing {exc.args[0]!r}") from None


def _freeze_family(family: Mapping, dim: int, tol: float, who: str) -> dict:
    frozen = {}
    for x, elements in family.items():
        mats = {}
        for a, m in elements.items():
            arr = np.array(as_array(m))
            if arr.shape != (dim, dim):
                raise StrategyError(f"{who}'s element for ({x!r}, {a!r}) has shape {arr.shape}, expected {(dim, dim)}")
            arr.setflags(write=False)
            mats[_freeze(a)] = arr
        check = is_povm(list(mats.values()), tol)
        if not check:
            raise StrategyError(
                f"{who}'s family for question {x!r} is not a POVM "
                f"(hermiticity {check.hermiticity:.2e}, min eig {check.min_eigenvalue:.2e}, "
                f"completeness {check.completeness:.2e})")
        frozen[_freeze(x)] = mats
    return frozen


def _family_to_json(family: Mapping) -> dict:
    return {json.dumps(_thaw(x)): [dict(outcome=_thaw(a), **Operator(m).to_json()) for a, m in fam.items()]
            for x, fam in family.items()}


def _family_from_json(data: Mapping) -> dict:
    return {_freeze(json.loads(x)): {_freeze(e["outcome"]): Operator.from_json(e).array for e in elements}
            for x, elements in data.items()}


def _joint_probabilities(state, dim_a, dim_b, mats_a, mats_b) -> np.ndarray:
    psi = np.asarray(state).reshape(dim_a, dim_b)
    # <psi| M (x) N |psi> = sum_kl (Psi^dag M Psi)_kl N_kl
    left = np.stack([psi.conj().T @ m @ psi for m in mats_a]) if mats_a else np.zeros((0, dim_b, dim_b))
    right = np.stack(mats_b) if mats_b else np.zeros((0, dim_b, dim_b))
    return np.real(np.einsum("akl,bkl->ab", left, right))


def check_alphabets(game: Game, strat: QuantumStrategy) -> None:
    for x in game.inputs_a:
        extra = set(strat.family_a(x)) - set(game.outputs_a)
        if extra:
            raise StrategyError(f"Alice's outcomes {sorted(extra)!r} on {x!r} are not in the game's alphabet")
    for y in game.inputs_b:
        extra = set(strat.family_b(y)) - set(game.outputs_b)
        if extra:
            raise StrategyError(f"Bob's outcomes {sorted(extra)!r} on {y!r} are not in the game's alphabet")


def acceptance_matrix(game: Game, strat: QuantumStrategy, x, y) -> np.ndarray:
    """``sum over accepted (a, b) of M_xa (x) N_yb`` on the joint space."""
    fam_a, fam_b = strat.family_a(x), strat.family_b(y)
    w = np.zeros((strat.dim_a * strat.dim_b,) * 2, dtype=complex)
    for a, b in game.accepted_pairs(x, y):
        if a in fam_a and b in fam_b:
            w += np.kron(fam_a[a], fam_b[b])
    return w


@dataclass(frozen=True)
class GameValueReport:
    per_question: dict
    """Raw acceptance probability per question pair (may stray outside [0, 1] by round-off)."""
    value: float
    perfect: bool
    tol: float

    @property
    def min_acceptance(self) -> float:
        return min(self.per_question.values())

    def clamped(self) -> dict:
        return {q: min(1.0, max(0.0, p)) for q, p in self.per_question.items()}


def evaluate(game: Game, strat: QuantumStrategy, tol: float = DEFAULT_TOL) -> GameValueReport:
    table = strat.acceptance_table(game)
    for q, p in table.items():
        if not (-tol <= p <= 1 + tol):
            raise StrategyError(f"acceptance probability {p!r} on {q!r} is outside [0, 1]")
    value = float(sum(float(game.prob(x, y)) * p for (x, y), p in table.items()))
    return GameValueReport(table, value, min(table.values()) >= 1 - tol, tol)


# --- canonical strategies ------------------------------------------------------

def pvm_from_commuting_observables(obs: Sequence, constraint_sign: int | None = None,
                                   tol: float = DEFAULT_TOL) -> dict[tuple, np.ndarray]:
    """Joint projective measurement of commuting +-1 observables.

    Outcome ``(a_1, ..., a_k)`` gets ``prod_j (1 + a_j O_j) / 2``.  With a
    ``constraint_sign`` the product of the observables must equal that sign
    times the identity, and only tuples with ``prod a_j == constraint_sign``
    are returned (the others are zero).  Without one, zero projectors are
    dropped.
    """
    mats = [as_array(o) for o in obs]
    if not mats:
        raise StrategyError("need at least one observable")
    dim = mats[0].shape[0]
    eye = np.eye(dim)
    for m in mats:
        if frob(m @ m - eye) > tol:
            raise StrategyError("observable does not square to the identity")
    worst = opcore.max_pairwise_commutator(mats)
    if worst > tol:
        raise opcore.NonCommutingError(f"observables do not commute (max commutator norm {worst:.3e})", worst)
    if constraint_sign is not None:
        prod = mats[0]
        for m in mats[1:]:
            prod = prod @ m
        if frob(prod - constraint_sign * eye) > tol:
            raise StrategyError(f"product of observables is not {constraint_sign:+d} times the identity")

    family = {}
    for outcome in itertools.product((1, -1), repeat=len(mats)):
        proj = eye.astype(complex)
        for a, m in zip(outcome, mats):
            proj = proj @ (eye + a * m) / 2
        if constraint_sign is not None and math.prod(outcome) != constraint_sign:
            if frob(proj) > tol:
                raise StrategyError(f"outcome {outcome} violates the sign constraint but has support")
            continue
        if constraint_sign is None and frob(proj) <= tol:
            continue
        family[outcome] = proj
    return family


def context_strategy(table) -> QuantumStrategy:
    """Perfect strategy for :func:`games.context_game` on ``|Phi_d>``.

    Alice measures her context's observables; Bob measures the transposes of
    his, since ``<Phi| A (x) B^T |Phi> = tr(AB) / d`` makes their shared
    observables agree with certainty.
    """
    povms_a = {x: pvm_from_commuting_observables(ops, sign)
               for x, (_, ops, sign) in enumerate(table.alice_contexts())}
    povms_b = {y: pvm_from_commuting_observables([o.T for o in ops], sign)
               for y, (_, ops, sign) in enumerate(table.bob_contexts())}
    d = table.dim
    return QuantumStrategy(d, d, opcore.max_entangled(d), povms_a, povms_b)


def bell_pairs_state(n: int) -> np.ndarray:
    """``n`` Bell pairs ``(q_j, q_j')`` regrouped as Alice's qubits then Bob's."""
    phi = opcore.max_entangled(2)
    psi = opcore.kron(*([phi] * n)) if n else np.ones(1, dtype=complex)
    # factor order is (q1, q1', q2, q2', ...)
    perm = [2 * j for j in range(n)] + [2 * j + 1 for j in range(n)]
    return opcore.permute_subsystems(psi, [2] * (2 * n), perm)


def msg_canonical_strategy(square: ObservableSquare | None = None) -> QuantumStrategy:
    square = standard_square() if square is None else square
    strat = context_strategy(square)
    n = opcore.check_dims_power_of_two(square.dim)
    # identical to |Phi_4>, built here from Bell pairs to keep the pairing explicit
    return QuantumStrategy(strat.dim_a, strat.dim_b, bell_pairs_state(n), strat.povms_a, strat.povms_b)


def ghz3_canonical_strategy() -> QuantumStrategy:
    return context_strategy(MerminStar())


def chsh_strategy() -> QuantumStrategy:
    """Optimal CHSH strategy: Bell state, Alice at angles 0 and pi/4, Bob at +-pi/8."""

    def basis(theta):
        obs = np.cos(2 * theta) * opcore.Z + np.sin(2 * theta) * opcore.X
        eye = np.eye(2)
        return {0: (eye + obs) / 2, 1: (eye - obs) / 2}

    return QuantumStrategy(
        2, 2, opcore.max_entangled(2),
        {0: basis(0.0), 1: basis(np.pi / 4)},
        {0: basis(np.pi / 8), 1: basis(-np.pi / 8)},
    )


def classical_as_quantum(game: Game, strategy: ClassicalStrategy, dim: int = 2) -> QuantumStrategy:
    """Deterministic POVMs on the product state ``|0...0>``."""
    eye = np.eye(dim)
    state = opcore.basis_state(0, dim * dim)
    povms_a = {x: {strategy.f[x]: eye} for x in game.inputs_a}
    povms_b = {y: {strategy.g[y]: eye} for y in game.inputs_b}
    return QuantumStrategy(dim, dim, state, povms_a, povms_b)


def builtin_strategy(name: str, variant: int | None = None) -> QuantumStrategy:
    from .games import ALIASES, variant_square

    key = ALIASES.get(name, name).removesuffix("-builtin")
    key = ALIASES.get(key, key)
    if key in ("magic_square", "trivial"):
        return msg_canonical_strategy(None if variant is None else variant_square(variant))
    if key == "chsh":
        return chsh_strategy()
    if key == "ghz3":
        return ghz3_canonical_strategy()
    raise StrategyError(f"no builtin strategy named {name!r}")


def load_strategy(path: str, tol: float = DEFAULT_TOL) -> QuantumStrategy:
    with open(path) as fh:
        return QuantumStrategy.from_json(json.load(fh), tol=tol)
