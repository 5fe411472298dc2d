"""Parallel composition of perfect strategies.

Two constructions are offered.  :func:`tensor_strategies` plays every game on
its own registers, so the players hold ``N = sum n_i`` qubits each.
:func:`route_strategies` embeds every game into one common space of
``nbar = max n_i`` qubits, for a referee who asks a single game at a time.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import opcore
from .games import Game, ParallelGame, _freeze, parallel_game
from .opcore import DEFAULT_TOL, frob
from .strategies import (
    QuantumStrategy,
    StrategyError,
    _joint_probabilities,
    acceptance_matrix,
    evaluate,
)


class NotPerfectError(StrategyError):
    """A strategy handed to a composition does not win its game with certainty."""


# --- tensor composition --------------------------------------------------------

class _ProductElements(Mapping):
    def __init__(self, families):
        self._families = families

    def __getitem__(self, a):
        a = _freeze(a)
        if not isinstance(a, tuple) or len(a) != len(self._families):
            raise KeyError(a)
        return opcore.kron(*(fam[ai] for fam, ai in zip(self._families, a)))

    def __iter__(self):
        return itertools.product(*(fam.keys() for fam in self._families))

    def __len__(self):
        return math.prod(len(fam) for fam in self._families)


class _ProductFamily(Mapping):
    """Question tuple -> outcome tuple -> Kronecker product, built on access."""

    def __init__(self, families):
        self._families = families

    def __getitem__(self, x):
        x = _freeze(x)
        if not isinstance(x, tuple) or len(x) != len(self._families):
            raise KeyError(x)
        return _ProductElements([fam[xi] for fam, xi in zip(self._families, x)])

    def __iter__(self):
        return itertools.product(*(fam.keys() for fam in self._families))

    def __len__(self):
        return math.prod(len(fam) for fam in self._families)


def product_state(states: Sequence, dims_a: Sequence[int], dims_b: Sequence[int]) -> np.ndarray:
    """``(x)_i |psi_i>`` regrouped as all of Alice's factors, then all of Bob's."""
    k = len(states)
    psi = opcore.kron(*(np.asarray(s).reshape(-1) for s in states))
    dims = [d for pair in zip(dims_a, dims_b) for d in pair]
    perm = [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)]
    return opcore.permute_subsystems(psi, dims, perm)


@dataclass(frozen=True, eq=False)
class ProductStrategy(QuantumStrategy):
    """Component strategies run side by side on disjoint registers.

    POVM elements are formed lazily; acceptance probabilities for the
    matching :class:`ParallelGame` are computed factor by factor on the
    global state without building any global operator.
    """

    components: tuple = field(default=(), repr=False)

    @classmethod
    def from_components(cls, strats: Sequence[QuantumStrategy], tol: float = DEFAULT_TOL) -> "ProductStrategy":
        strats = tuple(strats)
        dims_a = [s.dim_a for s in strats]
        dims_b = [s.dim_b for s in strats]
        state = product_state([s.state for s in strats], dims_a, dims_b)
        return cls(math.prod(dims_a), math.prod(dims_b), state,
                   _ProductFamily([s.povms_a for s in strats]),
                   _ProductFamily([s.povms_b for s in strats]),
                   tol=tol, validate=False, components=strats)

    def acceptance_table(self, game) -> dict[tuple, float]:
        if not isinstance(game, ParallelGame) or len(game.components) != len(self.components):
            return super().acceptance_table(game)
        k = len(self.components)
        dims_a = [s.dim_a for s in self.components]
        dims_b = [s.dim_b for s in self.components]
        psi = self.state.reshape(dims_a + dims_b)
        ops = []
        for g, s in zip(game.components, self.components):
            da, db = s.dim_a, s.dim_b
            ops.append([((x, y), acceptance_matrix(g, s, x, y).reshape(da, db, da, db))
                        for x, y in g.questions()])

        table = {}

        def descend(depth, vec, qs):
            keep = (depth, k + depth)
            if depth == k - 1:
                rest = [ax for ax in range(2 * k) if ax not in keep]
                overlap = np.tensordot(psi.conj(), vec, axes=(rest, rest))
                for q, w in ops[depth]:
                    full = qs + [q]
                    x = tuple(p[0] for p in full)
                    y = tuple(p[1] for p in full)
                    table[(x, y)] = float(np.real(np.einsum("ijkl,ijkl->", w, overlap)))
                return
            for q, w in ops[depth]:
                out = np.tensordot(w, vec, axes=([2, 3], list(keep)))
                descend(depth + 1, np.moveaxis(out, [0, 1], list(keep)), qs + [q])

        descend(0, psi, [])
        # row-major order over the product alphabets
        return {q: table[q] for q in game.questions()}


def _require_perfect(games, strats, tol):
    if len(games) != len(strats):
        raise StrategyError(f"{len(games)} games but {len(strats)} strategies")
    if not games:
        raise StrategyError("need at least one game")
    for g, s in zip(games, strats):
        report = evaluate(g, s, tol)
        if not report.perfect:
            raise NotPerfectError(
                f"strategy for {g.name!r} is not perfect (min acceptance {report.min_acceptance:.12g})")


def tensor_strategies(games: Sequence[Game], strats: Sequence[QuantumStrategy],
                      tol: float = DEFAULT_TOL) -> tuple:
    """Parallel game and the product of perfect strategies.

    A single game is returned unchanged.

    Raises:
        NotPerfectError: some strategy loses its game with positive probability.
    """
    games, strats = list(games), list(strats)
    _require_perfect(games, strats, tol)
    if len(games) == 1:
        return games[0], strats[0]
    return parallel_game(games), ProductStrategy.from_components(strats, tol)


def embedded_element(strats: Sequence[QuantumStrategy], i: int, element, side: str = "a") -> np.ndarray:
    """``1 (x) ... (x) element (x) ... (x) 1`` on one player's product space."""
    dims = [s.dim_a if side == "a" else s.dim_b for s in strats]
    factors = [np.eye(d) for d in dims]
    factors[i] = np.asarray(element)
    return opcore.kron(*factors)


def cross_game_commutation(strats: Sequence[QuantumStrategy], samples: int = 20,
                           rng: np.random.Generator | None = None) -> float:
    """Largest commutator norm between embedded elements of different games."""
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for i, j in itertools.combinations(range(len(strats)), 2):
        for side in ("a", "b"):
            fams = [s.povms_a if side == "a" else s.povms_b for s in (strats[i], strats[j])]
            for _ in range(samples):
                picks = []
                for fam in fams:
                    xs = list(fam)
                    x = xs[rng.integers(len(xs))]
                    labels = list(fam[x])
                    picks.append(fam[x][labels[rng.integers(len(labels))]])
                m = embedded_element(strats, i, picks[0], side)
                n = embedded_element(strats, j, picks[1], side)
                worst = max(worst, frob(opcore.commutator(m, n)))
    return worst


def factorization_residuals(games: Sequence[Game], strats: Sequence[QuantumStrategy],
                            product: QuantumStrategy, samples: int = 100,
                            rng: np.random.Generator | None = None) -> np.ndarray:
    """``|<Psi| M_xa (x) N_yb |Psi> - prod_i <psi_i| M (x) N |psi_i>|`` on random tuples.

    Each component outcome pair is drawn from its own answer distribution
    half of the time and uniformly otherwise, so both vanishing and
    non-vanishing probabilities are exercised.
    """
    rng = rng or np.random.default_rng(0)
    out = np.empty(samples)
    for t in range(samples):
        xs, ys, as_, bs, expected = [], [], [], [], 1.0
        for g, s in zip(games, strats):
            x = g.inputs_a[rng.integers(len(g.inputs_a))]
            y = g.inputs_b[rng.integers(len(g.inputs_b))]
            dist = s.answer_distribution(x, y)
            pairs = list(dist)
            if rng.random() < 0.5:
                p = np.clip(np.array([dist[q] for q in pairs]), 0, None)
                a, b = pairs[rng.choice(len(pairs), p=p / p.sum())]
            else:
                a, b = pairs[rng.integers(len(pairs))]
            xs.append(x), ys.append(y), as_.append(a), bs.append(b)
            expected *= dist[(a, b)]
        m = product.family_a(tuple(xs))[tuple(as_)]
        n = product.family_b(tuple(ys))[tuple(bs)]
        psi = product.state.reshape(product.dim_a, product.dim_b)
        lhs = float(np.real(np.sum((psi.conj().T @ m @ psi) * n)))
        out[t] = abs(lhs - expected)
    return out


# --- routed composition --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RoutedPlan:
    """Common space for a referee that asks one game at a time.

    ``lifted[i]`` is game ``i``'s strategy moved onto ``C^d (x) C^d`` with
    shared state ``|Phi_d>``.
    """

    d: int
    nbar: int
    qubits: tuple
    isometries_a: tuple = field(repr=False)
    isometries_b: tuple = field(repr=False)
    shared_state: np.ndarray = field(repr=False)
    lift: str
    lifted: tuple = field(repr=False)

    @property
    def qubits_per_player(self) -> int:
        return self.nbar

    @property
    def tensor_qubits(self) -> int:
        return sum(self.qubits)


def _unitary_factor(strat: QuantumStrategy, tol: float) -> np.ndarray:
    # |psi> = (1 (x) V)|Phi_d>  with  V = sqrt(d) Psi^T
    if strat.dim_a != strat.dim_b:
        raise StrategyError("routing needs equal local dimensions for each game")
    d = strat.dim_a
    v = math.sqrt(d) * strat.state.reshape(d, d).T
    err = frob(v.conj().T @ v - np.eye(d))
    if err > tol:
        raise StrategyError(f"state is not maximally entangled (unitarity defect {err:.3e})")
    return v


def _completion_label(labels):
    try:
        return min(labels)
    except TypeError:
        return sorted(labels, key=repr)[0]


def _lift_family(family: Mapping, u: np.ndarray, lift: str) -> dict:
    d, di = u.shape
    out = {}
    if lift == "pad":
        pad = np.eye(d // di)
        for x, fam in family.items():
            out[x] = {a: np.kron(m, pad) for a, m in fam.items()}
        return out
    complement = np.eye(d) - u @ u.conj().T
    for x, fam in family.items():
        default = _completion_label(list(fam))
        out[x] = {a: u @ m @ u.conj().T + (complement if a == default else 0) for a, m in fam.items()}
    return out


def route_strategies(games: Sequence[Game], strats: Sequence[QuantumStrategy], lift: str = "isometry",
                     tol: float = DEFAULT_TOL) -> RoutedPlan:
    """Move every perfect strategy onto ``C^d (x) C^d`` sharing ``|Phi_d>``.

    Alice's isometry is ``|alpha> -> |alpha> (x) |0...0>``.  Bob's is its
    entrywise conjugate composed with ``V^dag``, where the game's state is
    ``(1 (x) V)|Phi_{d_i}>``; this requires each state to be maximally
    entangled.

    ``lift="isometry"`` maps ``M -> U M U^dag`` and gives the rest of the
    space to the smallest outcome label of the family.  ``lift="pad"`` maps
    ``M -> M (x) 1``, which preserves the statistics without rescaling.
    """
    if lift not in ("isometry", "pad"):
        raise ValueError(f"unknown lift {lift!r}")
    games, strats = list(games), list(strats)
    _require_perfect(games, strats, tol)
    qubits = tuple(s.qubits_a for s in strats)
    nbar = max(qubits)
    d = 2**nbar
    iso_a, iso_b, lifted = [], [], []
    for s in strats:
        v = _unitary_factor(s, tol)
        di = s.dim_a
        u_a = np.kron(np.eye(di), opcore.basis_state(0, d // di).reshape(-1, 1))
        u_b = u_a.conj() @ v.conj().T
        for u in (u_a, u_b):
            if frob(u.conj().T @ u - np.eye(di)) > tol:
                raise StrategyError("constructed map is not an isometry")
        # Bob's operators in the frame where the shared state is |Phi>
        fam_b = {y: {b: v.conj().T @ n @ v for b, n in fam.items()} for y, fam in s.povms_b.items()}
        pa = _lift_family(s.povms_a, u_a, lift)
        pb = _lift_family(fam_b, u_a.conj(), lift) if lift == "isometry" else _lift_family(fam_b, u_a, lift)
        lifted.append(QuantumStrategy(d, d, opcore.max_entangled(d), pa, pb, tol=tol))
        iso_a.append(u_a)
        iso_b.append(u_b)
    return RoutedPlan(d, nbar, qubits, tuple(iso_a), tuple(iso_b), opcore.max_entangled(d), lift, tuple(lifted))


@dataclass(frozen=True)
class GameRouteResult:
    name: str
    qubits: int
    max_raw_residual: float
    max_rescaled_residual: float | None
    raw_min_acceptance: float
    rescaled_min_acceptance: float | None
    failures: tuple
    """Worst raw mismatches as ``(x, y, a, b, p_new, p_orig)``."""


@dataclass(frozen=True)
class RouteReport:
    lift: str
    games: tuple
    tol: float

    @property
    def max_raw_residual(self) -> float:
        return max(g.max_raw_residual for g in self.games)

    @property
    def max_rescaled_residual(self) -> float | None:
        vals = [g.max_rescaled_residual for g in self.games if g.max_rescaled_residual is not None]
        return max(vals) if vals else None

    @property
    def max_residual(self) -> float:
        """Residual of the reading that matches the lift: rescaled for isometries, raw for padding."""
        resc = self.max_rescaled_residual
        return self.max_raw_residual if resc is None else resc

    @property
    def prob_match(self) -> bool:
        return self.max_residual <= self.tol

    @property
    def raw_prob_match(self) -> bool:
        return self.max_raw_residual <= self.tol

    @property
    def min_acceptance(self) -> float:
        vals = [g.rescaled_min_acceptance if g.rescaled_min_acceptance is not None else g.raw_min_acceptance
                for g in self.games]
        return min(vals)

    @property
    def failures(self) -> list[dict]:
        return [{"game": g.name, "x": f[0], "y": f[1], "a": f[2], "b": f[3], "p_new": f[4], "p_orig": f[5]}
                for g in self.games for f in g.failures]


def routing_report(plan: RoutedPlan, games: Sequence[Game], strats: Sequence[QuantumStrategy],
                   tol: float = DEFAULT_TOL, keep_failures: int = 10) -> RouteReport:
    """Compare routed and original statistics on every ``(i, x, y, a, b)``.

    The raw reading evaluates the lifted POVMs on ``|Phi_d>`` as they stand.
    For isometric lifts the rescaled reading restricts both players to the
    embedded subspaces and renormalizes by the weight of that branch.
    """
    d = plan.d
    results = []
    for i, (g, s) in enumerate(zip(games, strats)):
        lifted = plan.lifted[i]
        proj_a = plan.isometries_a[i] @ plan.isometries_a[i].conj().T
        proj_b = plan.isometries_a[i].conj() @ plan.isometries_a[i].T
        rescale = plan.lift == "isometry"
        if rescale:
            branch = float(np.real(opcore.expectation(plan.shared_state, np.kron(proj_a, proj_b))))
        raw_worst, resc_worst, mismatches = 0.0, 0.0, []
        raw_acc, resc_acc = [], []
        for x, y in g.questions():
            orig = s.answer_distribution(x, y)
            new = lifted.answer_distribution(x, y)
            raw_win = resc_win = 0.0
            if rescale:
                fa, fb = lifted.family_a(x), lifted.family_b(y)
                la, lb = list(fa), list(fb)
                probs = _joint_probabilities(plan.shared_state, d, d,
                                             [proj_a @ fa[a] @ proj_a for a in la],
                                             [proj_b @ fb[b] @ proj_b for b in lb]) / branch
                resc = {(a, b): float(probs[j, k]) for j, a in enumerate(la) for k, b in enumerate(lb)}
            for key in set(orig) | set(new):
                p_orig, p_new = orig.get(key, 0.0), new.get(key, 0.0)
                wins = g.accepts(x, y, *key)
                err = abs(p_new - p_orig)
                raw_worst = max(raw_worst, err)
                if err > tol:
                    mismatches.append((err, (x, y, key[0], key[1], p_new, p_orig)))
                raw_win += p_new * wins
                if rescale:
                    p_resc = resc.get(key, 0.0)
                    resc_worst = max(resc_worst, abs(p_resc - p_orig))
                    resc_win += p_resc * wins
            raw_acc.append(raw_win)
            resc_acc.append(resc_win)
        mismatches.sort(key=lambda t: -t[0])
        results.append(GameRouteResult(
            g.name, s.qubits_a, raw_worst, resc_worst if rescale else None,
            min(raw_acc), min(resc_acc) if rescale else None,
            tuple(m for _, m in mismatches[:keep_failures])))
    return RouteReport(plan.lift, tuple(results), tol)


# --- reports -------------------------------------------------------------------

def tensor_report(games: Sequence[Game], strats: Sequence[QuantumStrategy], tol: float = DEFAULT_TOL,
                  samples: int = 100, rng: np.random.Generator | None = None) -> dict:
    rng = rng or np.random.default_rng(0)
    game, product = tensor_strategies(games, strats, tol)
    value = evaluate(game, product, tol)
    residuals = {"value_deficit": abs(1.0 - value.value)}
    if len(games) > 1:
        residuals["factorization_max"] = float(factorization_residuals(games, strats, product, samples, rng).max())
        residuals["cross_game_commutator_max"] = cross_game_commutation(strats, rng=rng)
    n = sum(s.qubits_a for s in strats)
    return {
        "mode": "tensor",
        "games": [g.name for g in games],
        "qubits_per_player": n,
        "N": n,
        "value": value.value,
        "per_question_min_acceptance": value.min_acceptance,
        "residuals": residuals,
        "pass": value.perfect and all(v <= tol for v in residuals.values()),
    }


def route_report_json(games: Sequence[Game], strats: Sequence[QuantumStrategy], lift: str = "isometry",
                      tol: float = DEFAULT_TOL) -> dict:
    plan = route_strategies(games, strats, lift, tol)
    report = routing_report(plan, games, strats, tol)
    residuals = {"prob_match_max": report.max_residual, "raw_prob_match_max": report.max_raw_residual}
    if report.max_rescaled_residual is not None:
        residuals["rescaled_prob_match_max"] = report.max_rescaled_residual
    return {
        "mode": "route",
        "lift": lift,
        "games": [g.name for g in games],
        "qubits_per_player": plan.nbar,
        "nbar": plan.nbar,
        "N": plan.tensor_qubits,
        "d": plan.d,
        "per_question_min_acceptance": report.min_acceptance,
        "residuals": residuals,
        "raw_reading": {
            "holds": report.raw_prob_match,
            "per_game_min_acceptance": {g.name: g.raw_min_acceptance for g in report.games},
            "failures": report.failures,
        },
        "pass": report.prob_match,
    }
