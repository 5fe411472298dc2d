"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import contextlib
import json
import time
from fractions import Fraction

import numpy as np
import pytest

from nlgcompress import cli, composer, compressor, games, liecart, opcore, strategies

from conftest import ACCEPTANCE_LINES
from test_games import naive_classical_value


@contextlib.contextmanager
def criterion(number, title):
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        line = f"[FAIL] criterion {number:>2}: {title} | {_describe(detail)} | {type(exc).__name__}: {exc}"
        ACCEPTANCE_LINES.append(line.splitlines()[0])
        print(line)
        raise
    line = f"[PASS] criterion {number:>2}: {title} | {_describe(detail)}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def _describe(detail):
    return ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in detail.items())


def test_criterion_01_msg_perfect_strategy():
    with criterion(1, "MSG builtin strategy is perfect") as d:
        start = time.perf_counter()
        g, s = games.magic_square_game(), strategies.msg_canonical_strategy()
        report = strategies.evaluate(g, s, 1e-9)
        d["seconds"] = time.perf_counter() - start
        d["min_acceptance"] = report.min_acceptance
        assert len(report.per_question) == 9
        assert report.min_acceptance >= 1 - 1e-9
        assert d["seconds"] < 1


def test_criterion_02_classical_values():
    with criterion(2, "MSG classical value 17/18, CHSH 3/4") as d:
        start = time.perf_counter()
        msg = games.classical_value(games.magic_square_game())
        chsh = games.classical_value(games.chsh_game())
        d["seconds"] = time.perf_counter() - start
        d["msg"] = str(msg.value)
        d["chsh"] = str(chsh.value)
        d["msg_oracle"] = str(naive_classical_value(games.magic_square_game()))
        assert msg.exact and chsh.exact
        assert d["msg_oracle"] == d["msg"]
        assert naive_classical_value(games.chsh_game()) == chsh.value
        assert chsh.value == Fraction(3, 4)
        assert d["seconds"] < 10
        assert msg.value == Fraction(17, 18)


def test_criterion_03_tensor_composition():
    with criterion(3, "4xMSG tensor composition") as d:
        gs = [games.magic_square_game()] * 4
        ss = [strategies.msg_canonical_strategy()] * 4
        game, prod = composer.tensor_strategies(gs, ss, 1e-9)
        d["qubits_per_player"] = prod.qubits_a
        value = strategies.evaluate(game, prod, 1e-9).value
        d["value_deficit"] = abs(1 - value)
        res = composer.factorization_residuals(gs, ss, prod, samples=100, rng=np.random.default_rng(0))
        d["factorization_max"] = float(res.max())
        assert prod.qubits_a == prod.qubits_b == 8
        assert abs(1 - value) <= 1e-9
        assert len(res) == 100 and res.max() <= 1e-9


def test_criterion_04_routed_composition():
    with criterion(4, "routed MSG + ghz3") as d:
        gs = [games.magic_square_game(), games.ghz3_game()]
        ss = [strategies.msg_canonical_strategy(), strategies.ghz3_canonical_strategy()]
        rep = composer.route_report_json(gs, ss, "isometry", 1e-9)
        d["qubits_per_player"] = rep["qubits_per_player"]
        d["prob_match_max"] = rep["residuals"]["prob_match_max"]
        d["raw_reading_holds"] = rep["raw_reading"]["holds"]
        assert rep["qubits_per_player"] == 3
        assert rep["residuals"]["prob_match_max"] <= 1e-9
        raw = rep["raw_reading"]
        if not raw["holds"]:
            d["localized_failures"] = len(raw["failures"])
            assert raw["failures"]
            for f in raw["failures"]:
                assert {"game", "x", "y", "a", "b", "p_new", "p_orig"} <= f.keys()
                assert abs(f["p_new"] - f["p_orig"]) > 1e-9


def test_criterion_05_cartan_and_kak():
    with criterion(5, "su(4) Cartan decomposition and KAK") as d:
        report = liecart.check_cartan(liecart.cartan_su4(), 1e-9)
        d["dims"] = report.dims
        d["cartan_residual"] = report.max_residual
        errs = [liecart.reconstruction_error(u, liecart.kak_su4(u)) for u in liecart.haar_su4(100, seed=0)]
        d["kak_max_error"] = max(errs)
        ident = liecart.kak_su4(np.eye(4)).c
        d["identity_c"] = ident
        assert report.dims == (6, 9, 3) and report.max_residual <= 1e-9
        assert len(errs) == 100 and max(errs) <= 1e-8
        assert np.allclose(ident, 0, atol=1e-12)


def test_criterion_06_lie_closures():
    with criterion(6, "Lie closures") as d:
        obs = [opcore.pauli(p) for row in games.STANDARD_SQUARE for p in row]
        msg = liecart.lie_closure(obs)
        xz = liecart.lie_closure([opcore.X, opcore.Z])
        again = liecart.lie_closure([b / 1j for b in msg.basis])
        d["msg"] = msg.dim
        d["xz"] = xz.dim
        d["msg_twice"] = again.dim
        assert msg.dim == 15 and xz.dim == 3
        assert again.dim == msg.dim and max(msg.residual(b) for b in again.basis) <= 1e-9


def _search(r):
    m = 0
    while 2**m - 1 < r:
        m += 1
    return m


def test_criterion_07_qubit_bound():
    import itertools

    with criterion(7, "qubit bound and reduction sweep") as d:
        mismatches = [r for r in range(1, 1024) if liecart.qubit_bound(r, 0) != _search(r)]
        cases = violations = 0
        for k in range(2, 5):
            for ns in itertools.product(range(2, 6), repeat=k):
                for r in range(1, sum(2**n - 1 for n in ns) + 1):
                    rep = liecart.qubit_report(r, r, ns)
                    if rep.non_strict:
                        cases += 1
                        violations += not rep.reduces
        d["bound_mismatches"] = len(mismatches)
        d["sweep_cases"] = cases
        d["violations"] = violations
        assert not mismatches and cases > 0 and violations == 0


def test_criterion_08_common_winning_sector():
    with criterion(8, "common winning sector") as d:
        g, s = games.magic_square_game(), strategies.msg_canonical_strategy()
        ops = compressor.product_acceptance_operators([g, g], [s, s])
        psi = composer.product_state([s.state, s.state], [4, 4], [4, 4])
        rep = compressor.verify_cws_state(psi, ops, 1e-9)
        d["fixed_point_residual"] = rep.max_residual
        agree = games.game_from_predicate("agree", [0], [0], [0, 1], [0, 1], lambda x, y, a, b: a == b)
        fam = {0: np.diag([1.0, 0.0]), 1: np.diag([0.0, 1.0])}
        zz = strategies.QuantumStrategy(2, 2, opcore.max_entangled(2), {0: fam}, {0: fam})
        cws = compressor.common_winning_sector(compressor.acceptance_operators(agree, zz), 1e-9, dims=(2, 2))
        d["L"] = len(cws.accepted_indices)
        d["schmidt_rank"] = opcore.schmidt_rank(cws.cws_state, (2, 2))
        assert rep.max_residual <= 1e-9
        assert d["L"] == 2 and d["schmidt_rank"] == 2


def _cli_json(capsys, *argv):
    code = cli.main([*argv, "--format", "json"])
    return code, json.loads(capsys.readouterr().out)


def test_criterion_09_compression_pipeline(capsys, tmp_path):
    with criterion(9, "compress msg,msg certificate") as d:
        path = tmp_path / "msg.json"
        code, summary = _cli_json(capsys, "compress", "--games", "msg,msg", "--out", str(path))
        d["n"] = f"{summary['n_compressed']}<{summary['n_baseline']}"
        assert summary["n_compressed"] == 3 and summary["n_baseline"] == 4
        assert path.exists()
        first = _cli_json(capsys, "verify", str(path))
        second = _cli_json(capsys, "verify", str(path))
        assert first == second and first[1]["consistent"]
        cert = json.loads(path.read_text())
        cert["checks"]["fixed_point_max"] = 0.0
        cert["checks"]["overall_pass"] = True
        path.write_text(json.dumps(cert))
        tampered = _cli_json(capsys, "verify", str(path))
        d["tampered_exit"] = tampered[0]
        assert tampered[0] == 1
        gs = [games.magic_square_game()] * 2
        ss = [strategies.msg_canonical_strategy()] * 2
        offline = {}
        for choice in compressor.OFFLINE_CHOICES:
            c = compressor.run_pipeline(gs, ss, choice).certificate
            value = c["checks"]["offline_identity_residual"]
            assert isinstance(value, float) and value >= 0
            assert compressor.verify_certificate(json.loads(json.dumps(c))).consistent
            offline[choice] = value
        d["offline_identity"] = {k: round(v, 6) for k, v in offline.items()}


def test_criterion_10_trivial_compression():
    with criterion(10, "trivial game compression, K=2") as d:
        g, s = games.trivial_game(), strategies.msg_canonical_strategy()
        cert = compressor.run_pipeline([g, g], [s, s]).certificate
        d["min_acceptance"] = cert["checks"]["min_acceptance"]
        d["overall_pass"] = cert["checks"]["overall_pass"]
        report = compressor.verify_certificate(json.loads(json.dumps(cert)))
        assert cert["checks"]["overall_pass"] and report.passed
        assert abs(1 - cert["checks"]["min_acceptance"]) <= 1e-12
        assert abs(1 - cert["checks"]["joint_acceptance_min"]) <= 1e-12
