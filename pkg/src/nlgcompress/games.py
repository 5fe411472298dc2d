"""Finite two-player non-local games and their exact classical values."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Mapping, Sequence

import numpy as np

from .opcore import DEFAULT_TOL, as_array, commutator, frob, is_hermitian, pauli

Label = Hashable

DEFAULT_BUDGET = 10**9


class GameError(ValueError):
    """Invalid game description."""


class BudgetExceeded(RuntimeError):
    """Exhaustive classical enumeration would exceed the configured budget."""


def _freeze(label):
    # JSON arrays come back as lists; labels must be hashable
    if isinstance(label, list):
        return tuple(_freeze(v) for v in label)
    return label


def _thaw(label):
    if isinstance(label, tuple):
        return [_thaw(v) for v in label]
    return label


def _exact(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    if isinstance(p, bool):
        raise GameError("probabilities must be numbers")
    if isinstance(p, int):
        return Fraction(p)
    if isinstance(p, float):
        # decimal literal semantics: 0.1 means 1/10
        return Fraction(repr(p))
    if isinstance(p, str):
        return Fraction(p.strip())
    raise GameError(f"cannot interpret {p!r} as a probability")


@dataclass(frozen=True, eq=False)
class Game:
    """A finite game with input distribution ``mu`` and 0/1 rule table.

    ``rule[i, j, k, l]`` is the verdict for ``(inputs_a[i], inputs_b[j],
    outputs_a[k], outputs_b[l])``.  ``weights`` holds ``mu`` exactly.
    """

    name: str
    inputs_a: tuple
    inputs_b: tuple
    outputs_a: tuple
    outputs_b: tuple
    weights: tuple = field(repr=False)
    rule: np.ndarray = field(repr=False)

    def __post_init__(self):
        for attr in ("inputs_a", "inputs_b", "outputs_a", "outputs_b"):
            labels = tuple(_freeze(v) for v in getattr(self, attr))
            if not labels:
                raise GameError(f"{attr} must be non-empty")
            if len(set(labels)) != len(labels):
                raise GameError(f"{attr} contains duplicate labels")
            object.__setattr__(self, attr, labels)
        shape = (len(self.inputs_a), len(self.inputs_b), len(self.outputs_a), len(self.outputs_b))
        rule = np.array(self.rule, dtype=bool)
        if rule.shape != shape:
            raise GameError(f"rule table has shape {rule.shape}, expected {shape}")
        rule.setflags(write=False)
        object.__setattr__(self, "rule", rule)
        weights = tuple(tuple(_exact(p) for p in row) for row in self.weights)
        if len(weights) != shape[0] or any(len(row) != shape[1] for row in weights):
            raise GameError("mu table does not match the input alphabets")
        if any(p < 0 for row in weights for p in row):
            raise GameError("mu has negative entries")
        total = sum(p for row in weights for p in row)
        if abs(float(total) - 1.0) > 1e-12:
            raise GameError(f"mu sums to {float(total)!r}, not 1")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_ix", {
            "inputs_a": {v: i for i, v in enumerate(self.inputs_a)},
            "inputs_b": {v: i for i, v in enumerate(self.inputs_b)},
            "outputs_a": {v: i for i, v in enumerate(self.outputs_a)},
            "outputs_b": {v: i for i, v in enumerate(self.outputs_b)},
        })

    @property
    def mu(self) -> np.ndarray:
        return np.array([[float(p) for p in row] for row in self.weights])

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.rule.shape

    @property
    def synchronous(self) -> bool:
        return self.inputs_a == self.inputs_b and self.outputs_a == self.outputs_b

    def index(self, kind: str, label) -> int:
        try:
            return self._ix[kind][_freeze(label)]
        except KeyError:
            raise GameError(f"unknown label {label!r} in {kind} of game {self.name!r}") from None

    def prob(self, x, y) -> Fraction:
        return self.weights[self.index("inputs_a", x)][self.index("inputs_b", y)]

    def accepts(self, x, y, a, b) -> bool:
        return bool(self.rule[self.index("inputs_a", x), self.index("inputs_b", y),
                              self.index("outputs_a", a), self.index("outputs_b", b)])

    def accepted_pairs(self, x, y) -> list[tuple]:
        i, j = self.index("inputs_a", x), self.index("inputs_b", y)
        ks, ls = np.nonzero(self.rule[i, j])
        return [(self.outputs_a[k], self.outputs_b[l]) for k, l in zip(ks, ls)]

    def questions(self):
        """Question pairs in row-major order."""
        return itertools.product(self.inputs_a, self.inputs_b)

    def to_json(self) -> dict:
        mu = [[_thaw(x), _thaw(y), str(self.weights[i][j])]
              for i, x in enumerate(self.inputs_a)
              for j, y in enumerate(self.inputs_b) if self.weights[i][j] != 0]
        accepted = [[_thaw(self.inputs_a[i]), _thaw(self.inputs_b[j]),
                     _thaw(self.outputs_a[k]), _thaw(self.outputs_b[l])]
                    for i, j, k, l in zip(*np.nonzero(self.rule))]
        return {
            "name": self.name,
            "inputs_a": [_thaw(v) for v in self.inputs_a],
            "inputs_b": [_thaw(v) for v in self.inputs_b],
            "outputs_a": [_thaw(v) for v in self.outputs_a],
            "outputs_b": [_thaw(v) for v in self.outputs_b],
            "mu": mu,
            "rule": {"accepted": accepted},
        }


@dataclass(frozen=True)
class ClassicalStrategy:
    f: Mapping
    g: Mapping


@dataclass(frozen=True)
class ClassicalValue:
    value: Fraction
    strategy: ClassicalStrategy
    exact: bool
    """False when the value is only a sampled lower bound."""
    evaluated: int

    def __float__(self) -> float:
        return float(self.value)


# --- construction -------------------------------------------------------------

def uniform_weights(n_a: int, n_b: int) -> tuple:
    p = Fraction(1, n_a * n_b)
    return tuple(tuple(p for _ in range(n_b)) for _ in range(n_a))


def game_from_predicate(name: str, inputs_a, inputs_b, outputs_a, outputs_b,
                        predicate: Callable[[Any, Any, Any, Any], bool], mu="uniform") -> Game:
    inputs_a, inputs_b = tuple(inputs_a), tuple(inputs_b)
    outputs_a, outputs_b = tuple(outputs_a), tuple(outputs_b)
    rule = np.zeros((len(inputs_a), len(inputs_b), len(outputs_a), len(outputs_b)), dtype=bool)
    for (i, x), (j, y), (k, a), (l, b) in itertools.product(
            enumerate(inputs_a), enumerate(inputs_b), enumerate(outputs_a), enumerate(outputs_b)):
        rule[i, j, k, l] = bool(predicate(x, y, a, b))
    weights = uniform_weights(len(inputs_a), len(inputs_b)) if mu == "uniform" else mu
    return Game(name, inputs_a, inputs_b, outputs_a, outputs_b, weights, rule)


def chsh_game() -> Game:
    return game_from_predicate("chsh", (0, 1), (0, 1), (0, 1), (0, 1),
                               lambda x, y, a, b: (a ^ b) == (x & y))


def trivial_game(name: str = "trivial", inputs=(0, 1, 2), outputs=None) -> Game:
    """A game every answer wins; alphabets default to the magic-square ones."""
    if outputs is None:
        outputs = tuple(itertools.product((1, -1), repeat=3))
    return game_from_predicate(name, inputs, inputs, outputs, outputs, lambda *_: True)


# --- observable tables ------------------------------------------------------

def _product_sign(ops: Sequence[np.ndarray], tol: float) -> int:
    prod = ops[0]
    for o in ops[1:]:
        prod = prod @ o
    dim = prod.shape[0]
    for s in (1, -1):
        if frob(prod - s * np.eye(dim)) <= tol:
            return s
    raise GameError("product of a context is not +-identity")


def _check_context(ops: Sequence[np.ndarray], tol: float, what: str) -> int:
    dim = ops[0].shape[0]
    for o in ops:
        if not is_hermitian(o, tol):
            raise GameError(f"{what}: observable is not Hermitian")
        if frob(o @ o - np.eye(dim)) > tol:
            raise GameError(f"{what}: observable does not square to the identity")
    for a, b in itertools.combinations(ops, 2):
        if frob(commutator(a, b)) > tol:
            raise GameError(f"{what}: observables do not commute")
    try:
        return _product_sign(ops, tol)
    except GameError:
        raise GameError(f"{what}: product is not +-identity") from None


@dataclass(frozen=True, eq=False)
class ObservableSquare:
    """A grid of +-1-valued observables with commuting rows and columns.

    Row and column signs are read off the verified products, so any
    Mermin-Peres style grid works regardless of where its minus signs sit.
    """

    cells: tuple
    labels: tuple | None = None
    tol: float = DEFAULT_TOL
    row_sign: tuple = field(init=False)
    col_sign: tuple = field(init=False)

    def __post_init__(self):
        cells = tuple(tuple(np.array(as_array(c)) for c in row) for row in self.cells)
        if not cells or any(len(row) != len(cells[0]) for row in cells):
            raise GameError("square must be a non-empty rectangular grid")
        dim = cells[0][0].shape
        if any(c.shape != dim for row in cells for c in row):
            raise GameError("all cells must share one dimension")
        object.__setattr__(self, "cells", cells)
        rows = tuple(_check_context(list(row), self.tol, f"row {r}") for r, row in enumerate(cells))
        cols = tuple(_check_context([row[c] for row in cells], self.tol, f"column {c}")
                     for c in range(len(cells[0])))
        object.__setattr__(self, "row_sign", rows)
        object.__setattr__(self, "col_sign", cols)

    @classmethod
    def from_paulis(cls, grid: Sequence[Sequence[str]], tol: float = DEFAULT_TOL) -> "ObservableSquare":
        return cls(tuple(tuple(pauli(s) for s in row) for row in grid),
                   labels=tuple(tuple(row) for row in grid), tol=tol)

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def cols(self) -> int:
        return len(self.cells[0])

    @property
    def dim(self) -> int:
        return self.cells[0][0].shape[0]

    def alice_contexts(self):
        return [([(r, c) for c in range(self.cols)], list(self.cells[r]), self.row_sign[r])
                for r in range(self.rows)]

    def bob_contexts(self):
        return [([(r, c) for r in range(self.rows)], [self.cells[r][c] for r in range(self.rows)],
                 self.col_sign[c]) for c in range(self.cols)]


STANDARD_SQUARE = (
    ("IZ", "ZI", "ZZ"),
    ("XI", "IX", "XX"),
    ("-XZ", "-ZX", "YY"),
)

VARIANT_SQUARES = {
    1: (("YX", "XY", "ZZ"), ("YI", "IY", "YY"), ("IX", "XI", "XX")),
    2: (("ZX", "XZ", "YY"), ("IX", "XI", "XX"), ("ZI", "IZ", "ZZ")),
    3: (("IX", "XI", "XX"), ("ZX", "XZ", "YY"), ("ZI", "IZ", "ZZ")),
    4: (("IZ", "XI", "XZ"), ("ZI", "IY", "ZY"), ("ZZ", "XY", "YX")),
}


def standard_square() -> ObservableSquare:
    return ObservableSquare.from_paulis(STANDARD_SQUARE)


def variant_square(variant: int) -> ObservableSquare:
    try:
        return ObservableSquare.from_paulis(VARIANT_SQUARES[variant])
    except KeyError:
        raise GameError(f"magic square variant must be one of {sorted(VARIANT_SQUARES)}") from None


# Mermin's three-qubit star: five lines of four commuting Paulis, any two lines
# meeting in exactly one point.  The first line holds the GHZ stabilizers.
MERMIN_STAR_LINES = (
    ("XXX", "XYY", "YXY", "YYX"),
    ("XXX", "XII", "IXI", "IIX"),
    ("XYY", "XII", "IYI", "IIY"),
    ("YXY", "YII", "IXI", "IIY"),
    ("YYX", "YII", "IYI", "IIX"),
)


@dataclass(frozen=True, eq=False)
class MerminStar:
    """Line table of the three-qubit Mermin star; both players receive lines."""

    tol: float = DEFAULT_TOL
    line_sign: tuple = field(init=False)

    def __post_init__(self):
        signs = tuple(_check_context([pauli(p) for p in line], self.tol, f"line {i}")
                      for i, line in enumerate(MERMIN_STAR_LINES))
        object.__setattr__(self, "line_sign", signs)

    @property
    def dim(self) -> int:
        return 8

    def _contexts(self):
        return [(list(line), [pauli(p) for p in line], s)
                for line, s in zip(MERMIN_STAR_LINES, self.line_sign)]

    alice_contexts = _contexts
    bob_contexts = _contexts


def context_game(name: str, table) -> Game:
    """Parity game over an observable table.

    Each player receives a context (a row, column or line), answers one +-1
    value per observable with product equal to the context sign, and the two
    answers must agree on every observable the contexts share.
    """
    alice, bob = table.alice_contexts(), table.bob_contexts()
    len_a, len_b = len(alice[0][0]), len(bob[0][0])
    outs_a = tuple(itertools.product((1, -1), repeat=len_a))
    outs_b = tuple(itertools.product((1, -1), repeat=len_b))

    def predicate(x, y, a, b):
        pts_a, _, sign_a = alice[x]
        pts_b, _, sign_b = bob[y]
        if math.prod(a) != sign_a or math.prod(b) != sign_b:
            return False
        return all(a[i] == b[pts_b.index(p)] for i, p in enumerate(pts_a) if p in pts_b)

    return game_from_predicate(name, range(len(alice)), range(len(bob)), outs_a, outs_b, predicate)


def magic_square_game(square: ObservableSquare | None = None, name: str = "magic_square") -> Game:
    return context_game(name, standard_square() if square is None else square)


def ghz3_game() -> Game:
    """Two-player line game on the Mermin star (stand-in three-qubit perfect game)."""
    return context_game("ghz3", MerminStar())


# --- parallel composition ----------------------------------------------------

DENSE_RULE_LIMIT = 5 * 10**7


@dataclass(frozen=True, eq=False)
class ParallelGame:
    """All component games played at once.

    Alphabets are tuples over the components, ``mu`` is the product
    distribution and the rule is the AND of the component rules.  The dense
    rule table is only built on request (``rule``), since for a few copies of
    a game it is already far too large to hold.
    """

    components: tuple
    name: str = ""

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise GameError("parallel_game needs at least one game")
        object.__setattr__(self, "components", comps)
        if not self.name:
            object.__setattr__(self, "name", " x ".join(g.name for g in comps))
        for attr in ("inputs_a", "inputs_b", "outputs_a", "outputs_b"):
            labels = tuple(itertools.product(*(getattr(g, attr) for g in comps)))
            object.__setattr__(self, attr, labels)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return tuple(math.prod(g.shape[k] for g in self.components) for k in range(4))

    @property
    def synchronous(self) -> bool:
        return all(g.synchronous for g in self.components)

    def index(self, kind: str, label) -> int:
        label = _freeze(label)
        if not isinstance(label, tuple) or len(label) != len(self.components):
            raise GameError(f"label {label!r} does not have one entry per component game")
        idx = 0
        for g, part in zip(self.components, label):
            idx = idx * len(getattr(g, kind)) + g.index(kind, part)
        return idx

    def prob(self, x, y) -> Fraction:
        return math.prod((g.prob(xi, yi) for g, xi, yi in zip(self.components, x, y)), start=Fraction(1))

    @property
    def weights(self) -> tuple:
        return tuple(tuple(self.prob(x, y) for y in self.inputs_b) for x in self.inputs_a)

    @property
    def mu(self) -> np.ndarray:
        return np.array([[float(p) for p in row] for row in self.weights])

    def accepts(self, x, y, a, b) -> bool:
        return all(g.accepts(*args) for g, *args in zip(self.components, x, y, a, b))

    def accepted_pairs(self, x, y) -> list[tuple]:
        per_game = [g.accepted_pairs(xi, yi) for g, xi, yi in zip(self.components, x, y)]
        return [(tuple(p[0] for p in combo), tuple(p[1] for p in combo))
                for combo in itertools.product(*per_game)]

    def questions(self):
        return itertools.product(self.inputs_a, self.inputs_b)

    @property
    def rule(self) -> np.ndarray:
        if math.prod(self.shape) > DENSE_RULE_LIMIT:
            raise GameError(f"dense rule table of shape {self.shape} is too large")
        cached = self.__dict__.get("_rule")
        if cached is None:
            k = len(self.components)
            rule = self.components[0].rule
            for g in self.components[1:]:
                rule = np.multiply.outer(rule, g.rule)
            # axes are (x1,y1,a1,b1,x2,...); regroup as (x..., y..., a..., b...)
            perm = [4 * i + slot for slot in range(4) for i in range(k)]
            cached = np.ascontiguousarray(np.transpose(rule, perm)).reshape(self.shape)
            cached.setflags(write=False)
            object.__setattr__(self, "_rule", cached)
        return cached

    def dense(self) -> Game:
        return Game(self.name, self.inputs_a, self.inputs_b, self.outputs_a, self.outputs_b,
                    self.weights, self.rule)

    def to_json(self) -> dict:
        return {"name": self.name, "parallel": [g.to_json() for g in self.components]}


def parallel_game(games: Sequence, name: str | None = None) -> ParallelGame:
    """Play all games at once: tuple alphabets, product ``mu``, AND of rules."""
    return ParallelGame(tuple(games), name or "")


# --- classical value ---------------------------------------------------------

def _integer_gains(game: Game) -> tuple[np.ndarray, int]:
    denom = math.lcm(*(p.denominator for row in game.weights for p in row))
    w = np.array([[int(p * denom) for p in row] for row in game.weights], dtype=object)
    gains = game.rule.astype(object) * w[:, :, None, None]
    return gains.astype(np.int64) if denom < 2**40 else gains, denom


def classical_value(game: Game, budget: int = DEFAULT_BUDGET, sample: int | None = None,
                    rng: np.random.Generator | None = None) -> ClassicalValue:
    """Best deterministic strategy value.

    One player's response function is enumerated depth-first; the other
    player's best response is computed question by question, so every
    deterministic pair is covered.  Branches whose optimistic completion
    cannot beat the incumbent are cut.  Arithmetic is on integer multiples of
    the common denominator of ``mu``, so the result is exact.

    Args:
        budget: maximum ``|O_A|^|I_A| * |O_B|^|I_B|`` for exhaustive search.
        sample: if given and the budget is exceeded, evaluate this many random
            response functions instead; the result is a lower bound with
            ``exact=False``.

    Raises:
        BudgetExceeded: the strategy space is too large and ``sample`` is None.
    """
    n_x, n_y, n_a, n_b = game.shape
    space = n_a**n_x * n_b**n_y
    gains, denom = _integer_gains(game)

    # enumerate the side with fewer response functions
    swap = n_b**n_y < n_a**n_x
    if swap:
        gains = np.transpose(gains, (1, 0, 3, 2))
        n_x, n_y, n_a, n_b = n_y, n_x, n_b, n_a

    if space > budget:
        if sample is None:
            raise BudgetExceeded(
                f"{space} deterministic strategy pairs exceed the budget of {budget}; "
                "pass sample=N for a sampled lower bound")
        best, f, g, count = _sampled_search(gains, sample, rng or np.random.default_rng(0))
        exact = False
    else:
        best, f, g, count = _exhaustive_search(gains)
        exact = True

    if swap:
        f, g = g, f
    strategy = ClassicalStrategy(
        {game.inputs_a[i]: game.outputs_a[k] for i, k in enumerate(f)},
        {game.inputs_b[j]: game.outputs_b[l] for j, l in enumerate(g)},
    )
    return ClassicalValue(Fraction(int(best), denom), strategy, exact, count)


def _best_response(score: np.ndarray) -> tuple[int, list[int]]:
    # score[y, b]: gain of answering b to y
    choice = [int(np.argmax(score[y])) for y in range(score.shape[0])]
    return int(sum(score[y, b] for y, b in enumerate(choice))), choice


def _exhaustive_search(gains: np.ndarray):
    n_x, n_y, n_a, n_b = gains.shape
    # optimistic[d][y, b]: best possible contribution of inputs d.. given Bob's answer b to y
    best_a = gains.max(axis=2)  # (x, y, b)
    optimistic = [best_a[d:].sum(axis=0) for d in range(n_x + 1)]
    state = {"best": -1, "f": None, "g": None, "count": 0}
    assignment = [0] * n_x

    def dfs(depth: int, score: np.ndarray):
        if depth == n_x:
            state["count"] += 1
            total, g = _best_response(score)
            if total > state["best"]:
                state.update(best=total, f=list(assignment), g=g)
            return
        bound = (score + optimistic[depth]).max(axis=1).sum()
        if bound <= state["best"]:
            return
        for a in range(n_a):
            assignment[depth] = a
            dfs(depth + 1, score + gains[depth, :, a, :])

    dfs(0, np.zeros((n_y, n_b), dtype=gains.dtype))
    return state["best"], state["f"], state["g"], state["count"]


def _sampled_search(gains: np.ndarray, samples: int, rng: np.random.Generator):
    n_x, n_y, n_a, n_b = gains.shape
    best, best_f, best_g = -1, None, None
    for _ in range(samples):
        f = rng.integers(0, n_a, size=n_x)
        score = sum(gains[x, :, f[x], :] for x in range(n_x))
        total, g = _best_response(score)
        if total > best:
            best, best_f, best_g = total, [int(v) for v in f], g
    return best, best_f, best_g, samples


def strategy_value(game: Game, strategy: ClassicalStrategy) -> Fraction:
    """Exact value of one deterministic strategy pair."""
    return sum((game.prob(x, y) for x, y in game.questions()
                if game.accepts(x, y, strategy.f[x], strategy.g[y])), start=Fraction(0))


# --- registry / JSON ----------------------------------------------------------

BUILTIN_GAMES = ("chsh", "magic_square", "ghz3", "trivial")
ALIASES = {"msg": "magic_square", "mermin_peres": "magic_square"}


def builtin_game(name: str, variant: int | None = None) -> Game:
    key = ALIASES.get(name, name)
    if key == "chsh":
        return chsh_game()
    if key == "magic_square":
        if variant is None:
            return magic_square_game()
        return magic_square_game(variant_square(variant), name=f"magic_square_v{variant}")
    if key == "ghz3":
        return ghz3_game()
    if key == "trivial":
        return trivial_game()
    raise GameError(f"unknown builtin game {name!r}; choose from {', '.join(BUILTIN_GAMES)}")


def make_game(data: Mapping) -> Game:
    """Build a game from its JSON description.

    ``mu`` is ``"uniform"`` or a list of ``[x, y, p]`` triples (unlisted pairs
    get 0; ``p`` may be a number or a ``"a/b"`` string).  ``rule`` is either
    ``{"builtin": name}`` or ``{"accepted": [[x, y, a, b], ...]}``.
    """
    if "parallel" in data:
        return parallel_game([make_game(g) for g in data["parallel"]], data.get("name"))
    try:
        rule_data = data["rule"]
    except KeyError:
        raise GameError("game data needs a 'rule'") from None
    if "builtin" in rule_data:
        base = builtin_game(rule_data["builtin"], rule_data.get("variant"))
        for attr in ("inputs_a", "inputs_b", "outputs_a", "outputs_b"):
            if attr in data and tuple(_freeze(v) for v in data[attr]) != getattr(base, attr):
                raise GameError(f"{attr} does not match builtin rule {rule_data['builtin']!r}")
        inputs_a, inputs_b = base.inputs_a, base.inputs_b
        outputs_a, outputs_b = base.outputs_a, base.outputs_b
        rule = base.rule
    else:
        try:
            inputs_a = tuple(_freeze(v) for v in data["inputs_a"])
            inputs_b = tuple(_freeze(v) for v in data["inputs_b"])
            outputs_a = tuple(_freeze(v) for v in data["outputs_a"])
            outputs_b = tuple(_freeze(v) for v in data["outputs_b"])
            accepted = rule_data["accepted"]
        except KeyError as exc:
            raise GameError(f"game data is missing {exc.args[0]!r}") from None
        ix = [{v: i for i, v in enumerate(s)} for s in (inputs_a, inputs_b, outputs_a, outputs_b)]
        rule = np.zeros(tuple(len(s) for s in (inputs_a, inputs_b, outputs_a, outputs_b)), dtype=bool)
        for entry in accepted:
            if len(entry) != 4:
                raise GameError(f"accepted tuple {entry!r} must have four entries")
            try:
                idx = tuple(m[_freeze(v)] for m, v in zip(ix, entry))
            except KeyError as exc:
                raise GameError(f"accepted tuple {entry!r} references unknown label {exc.args[0]!r}") from None
            rule[idx] = True

    mu = data.get("mu", "uniform")
    if mu == "uniform":
        weights = uniform_weights(len(inputs_a), len(inputs_b))
    else:
        ia = {v: i for i, v in enumerate(inputs_a)}
        ib = {v: i for i, v in enumerate(inputs_b)}
        table = [[Fraction(0)] * len(inputs_b) for _ in inputs_a]
        for entry in mu:
            x, y, p = entry
            try:
                table[ia[_freeze(x)]][ib[_freeze(y)]] += _exact(p)
            except KeyError:
                raise GameError(f"mu entry {entry!r} references an unknown input") from None
        weights = tuple(tuple(row) for row in table)
    name = data.get("name") or rule_data.get("builtin", "game")
    return Game(name, inputs_a, inputs_b, outputs_a, outputs_b, weights, rule)


def load_game(path: str) -> Game:
    with open(path) as fh:
        return make_game(json.load(fh))
