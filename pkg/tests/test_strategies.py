import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlgcompress import games, opcore, strategies
from nlgcompress.strategies import QuantumStrategy, StrategyError

from conftest import random_unitary


def brute_acceptance(game, strat, x, y):
    """Sum of <psi| M (x) N |psi> over accepted pairs, with the full kron each time."""
    psi = strat.state
    total = 0.0
    for a, m in strat.family_a(x).items():
        for b, n in strat.family_b(y).items():
            if game.accepts(x, y, a, b):
                total += np.real(np.vdot(psi, np.kron(m, n) @ psi))
    return total


@pytest.mark.parametrize("variant", [None, 1, 2, 3, 4])
def test_msg_strategy_is_perfect(variant):
    g = games.builtin_game("magic_square", variant)
    s = strategies.builtin_strategy("magic_square", variant)
    report = strategies.evaluate(g, s, 1e-9)
    assert report.perfect
    assert report.min_acceptance >= 1 - 1e-12
    for x, y in g.questions():
        assert brute_acceptance(g, s, x, y) == pytest.approx(report.per_question[(x, y)], abs=1e-13)


def test_msg_state_is_two_bell_pairs(msg_strat):
    # Bell pairs regrouped by player equal the maximally entangled state on 4 x 4
    assert np.allclose(msg_strat.state, opcore.max_entangled(4), atol=1e-15)


def test_ghz3_strategy_is_perfect(ghz3, ghz3_strat):
    report = strategies.evaluate(ghz3, ghz3_strat)
    assert report.perfect and report.value == pytest.approx(1, abs=1e-12)
    assert ghz3_strat.dim_a == 8


def test_chsh_strategy_value():
    g, s = games.chsh_game(), strategies.chsh_strategy()
    report = strategies.evaluate(g, s)
    # each question wins with cos^2(pi/8)
    assert report.value == pytest.approx(np.cos(np.pi / 8) ** 2, abs=1e-12)
    for (x, y), p in report.per_question.items():
        assert p == pytest.approx(brute_acceptance(g, s, x, y), abs=1e-13)
    assert not report.perfect


def test_classical_strategy_as_quantum_reproduces_value(msg):
    cv = games.classical_value(msg)
    s = strategies.classical_as_quantum(msg, cv.strategy)
    assert strategies.evaluate(msg, s).value == pytest.approx(float(cv.value), abs=1e-14)


def test_acceptance_matrix_expectation_matches_table(msg, msg_strat):
    table = msg_strat.acceptance_table(msg)
    for x, y in msg.questions():
        w = strategies.acceptance_matrix(msg, msg_strat, x, y)
        assert np.real(np.vdot(msg_strat.state, w @ msg_strat.state)) == pytest.approx(table[(x, y)], abs=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_local_unitary_rotation_preserves_acceptance(seed):
    """Rotating Alice's frame and the state together changes nothing observable."""
    rng = np.random.default_rng(seed)
    g, s = games.chsh_game(), strategies.chsh_strategy()
    u = random_unitary(2, rng)
    state = np.kron(u, np.eye(2)) @ s.state
    povms_a = {x: {a: u @ m @ u.conj().T for a, m in fam.items()} for x, fam in s.povms_a.items()}
    rotated = QuantumStrategy(2, 2, state, povms_a, s.povms_b)
    before, after = s.acceptance_table(g), rotated.acceptance_table(g)
    for q in before:
        assert after[q] == pytest.approx(before[q], abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_answer_distribution_sums_to_one(seed):
    rng = np.random.default_rng(seed)
    u = random_unitary(4, rng)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    v /= np.linalg.norm(v)
    proj = {k: np.outer(u[:, k], u[:, k].conj()) for k in range(2)}
    fam = {0: proj[0] + proj[1], 1: np.eye(4) - proj[0] - proj[1]}
    s = QuantumStrategy(4, 1, v, {0: fam}, {0: {0: np.eye(1)}})
    dist = s.answer_distribution(0, 0)
    assert sum(dist.values()) == pytest.approx(1, abs=1e-12)
    assert all(p >= -1e-12 for p in dist.values())


def test_rejects_bad_inputs():
    eye = np.eye(2)
    with pytest.raises(StrategyError):
        QuantumStrategy(2, 2, np.ones(4), {0: {0: eye}}, {0: {0: eye}})
    with pytest.raises(StrategyError):
        QuantumStrategy(2, 2, opcore.max_entangled(2), {0: {0: eye / 2}}, {0: {0: eye}})
    with pytest.raises(StrategyError):
        QuantumStrategy(2, 2, opcore.max_entangled(3)[:4] / np.linalg.norm(opcore.max_entangled(3)[:4]),
                        {0: {0: np.eye(3)}}, {0: {0: eye}})


def test_alphabet_mismatch_is_reported(msg):
    s = strategies.chsh_strategy()
    with pytest.raises(StrategyError):
        s.acceptance_table(msg)


def test_json_round_trip_is_bit_exact(msg, msg_strat):
    data = json.loads(json.dumps(msg_strat.to_json()))
    back = QuantumStrategy.from_json(data)
    assert np.array_equal(back.state, msg_strat.state)
    for x in msg.inputs_a:
        for a, m in msg_strat.family_a(x).items():
            assert np.array_equal(back.family_a(x)[a], m)
    assert json.dumps(back.to_json()) == json.dumps(msg_strat.to_json())


def test_json_missing_field():
    with pytest.raises(StrategyError):
        QuantumStrategy.from_json({"dim_a": 2})


def test_pvm_rejects_bad_observables():
    with pytest.raises(opcore.NonCommutingError):
        strategies.pvm_from_commuting_observables([opcore.X, opcore.Z])
    with pytest.raises(StrategyError):
        strategies.pvm_from_commuting_observables([2 * opcore.Z])
    with pytest.raises(StrategyError):
        strategies.pvm_from_commuting_observables([opcore.Z, opcore.Z], constraint_sign=-1)


def test_bell_pairs_state_pairs_qubits():
    psi = strategies.bell_pairs_state(3)
    # qubit j of Alice is maximally entangled with qubit j of Bob, so Z_j Z_j' = 1
    for j in range(3):
        zz = [opcore.I2] * 6
        zz[j] = opcore.Z
        zz[3 + j] = opcore.Z
        assert opcore.expectation(psi, opcore.kron(*zz)) == pytest.approx(1)
    assert opcore.schmidt_rank(psi, (8, 8)) == 8
