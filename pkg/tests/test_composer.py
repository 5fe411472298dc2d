import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlgcompress import composer, games, opcore, strategies
from nlgcompress.composer import NotPerfectError
from nlgcompress.strategies import QuantumStrategy, StrategyError


@pytest.fixture(scope="module")
def two_msg(msg, msg_strat):
    return composer.tensor_strategies([msg, msg], [msg_strat, msg_strat])


def test_structured_table_matches_generic_evaluation(two_msg):
    game, prod = two_msg
    fast = prod.acceptance_table(game)
    slow = QuantumStrategy.acceptance_table(prod, game)
    assert fast.keys() == slow.keys()
    assert max(abs(fast[q] - slow[q]) for q in fast) <= 1e-12


def test_structured_table_on_mixed_dimensions(msg, msg_strat, ghz3, ghz3_strat):
    game, prod = composer.tensor_strategies([ghz3, msg], [ghz3_strat, msg_strat])
    assert prod.dim_a == 32
    fast = prod.acceptance_table(game)
    rng = np.random.default_rng(0)
    keys = list(fast)
    for k in rng.choice(len(keys), 3, replace=False):
        x, y = keys[k]
        w = strategies.acceptance_matrix(game, prod, x, y)
        slow = np.real(np.vdot(prod.state, w @ prod.state))
        assert fast[(x, y)] == pytest.approx(slow, abs=1e-12)


def test_product_state_of_bell_pairs(msg_strat):
    psi = composer.product_state([msg_strat.state] * 3, [4] * 3, [4] * 3)
    assert np.allclose(psi, strategies.bell_pairs_state(6), atol=1e-15)


def test_product_state_layout_against_explicit_permutation(rng):
    a = rng.normal(size=6) + 1j * rng.normal(size=6)
    b = rng.normal(size=4) + 1j * rng.normal(size=4)
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    psi = composer.product_state([a, b], [2, 2], [3, 2])
    # (A1 B1 A2 B2) -> (A1 A2 B1 B2)
    expected = opcore.permute_subsystems(np.kron(a, b), [2, 3, 2, 2], [0, 2, 1, 3])
    assert np.allclose(psi, expected)


def test_product_elements_are_krons(two_msg, msg_strat):
    _, prod = two_msg
    a1, a2 = (1, 1, 1), (1, -1, -1)
    m = prod.family_a((0, 2))[(a1, a2)]
    assert np.array_equal(m, np.kron(msg_strat.family_a(0)[a1], msg_strat.family_a(2)[a2]))
    assert len(prod.family_a((0, 2))) == 16


def test_factorization_against_brute_force(two_msg, msg, msg_strat, rng):
    _, prod = two_msg
    res = composer.factorization_residuals([msg, msg], [msg_strat] * 2, prod, samples=40, rng=rng)
    assert res.max() <= 1e-12
    # dual route: one explicit tuple with the full operator on the full state
    x, y, a, b = (1, 2), (0, 2), ((1, 1, 1), (1, -1, -1)), ((1, 1, -1), (-1, -1, -1))
    lhs = np.real(np.vdot(prod.state, np.kron(prod.family_a(x)[a], prod.family_b(y)[b]) @ prod.state))
    rhs = 1.0
    for i in range(2):
        rhs *= msg_strat.answer_distribution(x[i], y[i])[(a[i], b[i])]
    assert lhs == pytest.approx(rhs, abs=1e-14)


def test_cross_game_commutation_vanishes(msg_strat, ghz3_strat):
    assert composer.cross_game_commutation([msg_strat, ghz3_strat], samples=5) <= 1e-14


def test_tensor_rejects_imperfect_strategies(msg, msg_strat):
    chsh, s = games.chsh_game(), strategies.chsh_strategy()
    with pytest.raises(NotPerfectError):
        composer.tensor_strategies([chsh, chsh], [s, s])
    with pytest.raises(StrategyError):
        composer.tensor_strategies([msg], [msg_strat, msg_strat])


def test_single_game_is_unchanged(msg, msg_strat):
    g, s = composer.tensor_strategies([msg], [msg_strat])
    assert g is msg and s is msg_strat


def test_tensor_report_two_msg(msg, msg_strat):
    rep = composer.tensor_report([msg, msg], [msg_strat] * 2, tol=1e-9, samples=20)
    assert rep["pass"] and rep["N"] == 4
    assert rep["residuals"]["value_deficit"] <= 1e-12


# --- routing --------------------------------------------------------------------

@pytest.fixture(scope="module")
def routed(msg, msg_strat, ghz3, ghz3_strat):
    gs, ss = [msg, ghz3], [msg_strat, ghz3_strat]
    return gs, ss, composer.route_strategies(gs, ss, "isometry")


def test_route_dimensions(routed):
    _, _, plan = routed
    assert plan.nbar == 3 and plan.d == 8 and plan.tensor_qubits == 5
    for s in plan.lifted:
        assert s.dim_a == s.dim_b == 8


def test_rescaled_reading_reproduces_statistics(routed):
    gs, ss, plan = routed
    report = composer.routing_report(plan, gs, ss)
    assert report.max_rescaled_residual <= 1e-12
    assert report.prob_match and report.min_acceptance >= 1 - 1e-12


def test_raw_reading_matches_closed_form(routed):
    """Raw lifted statistics mix the original with a point mass on the completion labels."""
    gs, ss, plan = routed
    for g, s, lifted in zip(gs, ss, plan.lifted):
        w = s.dim_a / plan.d
        for x, y in g.questions():
            a0, b0 = min(s.family_a(x)), min(s.family_b(y))
            orig = s.answer_distribution(x, y)
            new = lifted.answer_distribution(x, y)
            for key in new:
                expected = w * orig.get(key, 0.0) + (1 - w) * (key == (a0, b0))
                assert new[key] == pytest.approx(expected, abs=1e-12)


def test_raw_failures_are_localized(routed):
    gs, ss, plan = routed
    report = composer.routing_report(plan, gs, ss)
    by_game = {g.name: g for g in report.games}
    assert by_game["ghz3"].max_raw_residual <= 1e-12
    msg_result = by_game["magic_square"]
    assert msg_result.max_raw_residual == pytest.approx(0.5, abs=1e-12)
    assert msg_result.raw_min_acceptance == pytest.approx(0.5, abs=1e-12)
    assert report.failures and all(f["game"] == "magic_square" for f in report.failures)
    worst = report.failures[0]
    assert abs(worst["p_new"] - worst["p_orig"]) == pytest.approx(0.5, abs=1e-12)


def test_pad_lift_preserves_raw_statistics(routed):
    gs, ss, _ = routed
    plan = composer.route_strategies(gs, ss, "pad")
    report = composer.routing_report(plan, gs, ss)
    assert report.max_rescaled_residual is None
    assert report.max_raw_residual <= 1e-12 and report.raw_prob_match


def test_route_handles_non_phi_state(msg):
    """Bob's frame is corrected when the state is (1 (x) V)|Phi>."""
    s = strategies.msg_canonical_strategy()
    rng = np.random.default_rng(3)
    z = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    v, _ = np.linalg.qr(z)
    state = np.kron(np.eye(4), v) @ s.state
    povms_b = {y: {b: v @ n @ v.conj().T for b, n in fam.items()} for y, fam in s.povms_b.items()}
    twisted = QuantumStrategy(4, 4, state, s.povms_a, povms_b)
    assert strategies.evaluate(msg, twisted).perfect
    gs, ss = [msg, games.ghz3_game()], [twisted, strategies.ghz3_canonical_strategy()]
    for lift in ("isometry", "pad"):
        plan = composer.route_strategies(gs, ss, lift)
        assert composer.routing_report(plan, gs, ss).max_residual <= 1e-12


def test_route_rejects_non_maximal_state(msg, msg_strat):
    s = strategies.classical_as_quantum(msg, games.classical_value(msg).strategy, dim=4)
    with pytest.raises(StrategyError):
        composer._unitary_factor(s, 1e-9)
    with pytest.raises(ValueError):
        composer.route_strategies([msg], [msg_strat], lift="bogus")


def test_route_report_json(msg, msg_strat, ghz3, ghz3_strat):
    rep = composer.route_report_json([msg, ghz3], [msg_strat, ghz3_strat], tol=1e-9)
    assert rep["pass"] and rep["qubits_per_player"] == 3 and rep["N"] == 5
    assert rep["raw_reading"]["holds"] is False
    assert rep["raw_reading"]["per_game_min_acceptance"]["ghz3"] == pytest.approx(1)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.sampled_from([1, 2, 3, 4]), min_size=2, max_size=2))
def test_square_variant_products_are_perfect(variants):
    gs = [games.builtin_game("magic_square", v) for v in variants]
    ss = [strategies.builtin_strategy("magic_square", v) for v in variants]
    game, prod = composer.tensor_strategies(gs, ss)
    table = prod.acceptance_table(game)
    assert min(table.values()) >= 1 - 1e-12
