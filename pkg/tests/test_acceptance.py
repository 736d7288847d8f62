"""Acceptance suite at full scale: one PASS/FAIL line per criterion.

Each experiment is run once from its file in configs/ and shared between the
criteria that read it. Runtimes are wall-clock times of the whole experiment.
"""
import math
import os
import time

import numpy as np
import pytest

from supergw import harness, walk
from supergw.config import load_config_file
from supergw.laws import binary
from supergw.pathwise import PathwiseSampler

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
LINES = []

pytestmark = pytest.mark.slow


def _run(name, command):
    cfg = load_config_file(os.path.join(CONFIGS, name), command)
    t0 = time.perf_counter()
    rep = harness.EXPERIMENTS[command](cfg)
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def reports():
    cache = {}

    def get(name, command):
        if name not in cache:
            cache[name] = _run(name, command)
        return cache[name]
    return get


def _blocks(rep, prefix):
    return [b for b in rep["blocks"] if b["name"].startswith(prefix)]


def _verdict(capsys, number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}  {title}: {detail}"
    LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def test_criterion_01_height_oracle(reports, capsys):
    rep, secs = reports("height_check.cfg", "height-check")
    b = _blocks(rep, "height_oracle")[0]
    ok = b["pass"] and b["paths"] == 1000 and secs < 5.0
    _verdict(capsys, 1, "O(n) heights equal the quadratic formula", ok,
             f"{b['agreeing']}/{b['paths']} paths agree, {secs:.2f}s (limit 5s)")


def test_criterion_02_future_infimum(reports, capsys):
    rep, _ = reports("height_check.cfg", "height-check")
    b = _blocks(rep, "future_infimum_invariance")[0]
    _verdict(capsys, 2, "future-infimum transform keeps heights", b["pass"] and b["paths"] == 1000,
             f"{b['agreeing']}/{b['paths']} paths agree")


def test_criterion_03_xi_closed_forms(reports, capsys):
    rep, _ = reports("xi.cfg", "xi")
    rows = {b["law"]: b for b in rep["blocks"]}
    e1 = abs(rows["binary:0.25"]["xi"] - math.log(3))
    e2 = abs(rows["geometric:2"]["xi"] - math.log(2))
    _verdict(capsys, 3, "tilt root closed forms", e1 <= 1e-10 and e2 <= 1e-10,
             f"|xi - ln 3| = {e1:.2e}, |xi - ln 2| = {e2:.2e} (tol 1e-10)")


def test_criterion_04_extinction(reports, capsys):
    rep, secs = reports("extinction.cfg", "extinction")
    b = _blocks(rep, "extinction[binary:0.25]")[0]
    tol = 3 * math.sqrt((2 / 9) / 1e5)
    gap = abs(b["finite_frequency"] - 1 / 3)
    ok = b["trees"] == 10**5 and b["max_steps"] == 10**6 and gap <= tol and b["censoring_rate"] < 1e-3 \
        and secs < 60
    _verdict(capsys, 4, "finite-tree frequency", ok,
             f"freq {b['finite_frequency']:.5f}, |gap| {gap:.5f} <= {tol:.5f}, censored {b['censoring_rate']:.1e},"
             f" {secs:.1f}s (limit 60s)")


def test_criterion_05_spine_pairs(reports, capsys):
    rep, _ = reports("extinction.cfg", "extinction")
    b = _blocks(rep, "spine_pairs[binary:0.25]")[0]
    cells = {(c["b"], c["n"]): c for c in b["cells"]}
    c0, c1 = cells[(0, 2)], cells[(1, 2)]
    ok = b["draws"] == 10**5 and abs(c0["expected"] - 0.75) < 1e-12 and abs(c1["expected"] - 0.25) < 1e-12
    ok = ok and c0["pass"] and c1["pass"]
    _verdict(capsys, 5, "spine-pair law", ok,
             f"P(B=0,N=2) {c0['empirical']:.4f} vs 0.75 +- {3 * c0['sigma']:.4f}, "
             f"P(B=1,N=2) {c1['empirical']:.4f} vs 0.25 +- {3 * c1['sigma']:.4f}")


def test_criterion_06_pathwise_law(reports, capsys):
    rep, secs = reports("binary.cfg", "pathwise-law")
    eq = _blocks(rep, "law_equality")
    neg = _blocks(rep, "negative_control")
    ok = len(eq) == 12 and all(b["pass"] for b in eq) and neg and all(b["pass"] for b in neg) and secs < 180
    worst = min(min(sorted(b["p_values"])[-2:]) for b in eq)
    _verdict(capsys, 6, "pathwise construction vs direct walk", ok,
             f"{sum(b['pass'] for b in eq)}/{len(eq)} KS blocks pass in >= 2 of 3 batches "
             f"(weakest 2nd-best p {worst:.3f}), negative control rejected in {sum(b['pass'] for b in neg)}/"
             f"{len(neg)}, {secs:.0f}s (limit 180s)")


def test_criterion_07_bundle_consistency(capsys):
    sampler = PathwiseSampler(binary(0.25))
    bad = 0
    for r in range(1000):
        bd = sampler.build(200, 70, r)
        bad += not (np.array_equal(bd.h, walk.height_process(bd.s)) and bd.s_minus_ffinf.min() >= 0)
    _verdict(capsys, 7, "bundle heights and nonnegativity", bad == 0, f"{1000 - bad}/1000 bundles consistent")


def test_criterion_08_stable_marginal(reports, capsys):
    rep, secs = reports("stable_marginal.cfg", "stable-marginal")
    rows = [(b["name"], r) for b in rep["blocks"] for r in b["rows"]]
    ok = all(r["pass"] for _, r in rows) and len(rows) == 9 and secs < 300
    worst = max(abs(r["z"]) for _, r in rows)
    sup = max(abs(x["z_exact"]) for s in rep["supplementary"] for x in s["rows"])
    _verdict(capsys, 8, "rescaled walk Laplace transform vs stable limit", ok,
             f"{sum(r['pass'] for _, r in rows)}/9 (lambda, theta) cells within 3 stderr, worst |z| {worst:.1f}; "
             f"vs exact finite-n transform worst |z| {sup:.1f}; {secs:.0f}s (limit 300s)")


def test_criterion_09_k_tilde(reports, capsys):
    rep, secs = reports("k_tilde.cfg", "k-tilde")
    blocks = _blocks(rep, "k_tilde")
    rows = [r for b in blocks for r in b["rows"]]
    ok = len(blocks) == 2 and all(b["pass"] for b in blocks) and secs < 600
    desc = ", ".join(f"{b['name']} z {b['rows'][0]['z']:+.2f}" for b in blocks)
    gap = max(r["oracle_gap"] for r in rows)
    _verdict(capsys, 9, "size-biased exploration walk transform", ok,
             f"{desc}; quadrature vs grid oracle gap {gap:.1e}; {secs:.0f}s (limit 600s)")


def test_criterion_10_measure_change(reports, capsys):
    rep, _ = reports("phi_check.cfg", "phi-check")
    mean = _blocks(rep, "phi_mean")[0]
    lb = _blocks(rep, "phi_lower_bound")[0]
    ok = mean["pass"] and lb["pass"] and mean["outer"] == 1000 and mean["inner"] == 1000
    _verdict(capsys, 10, "measure change mean and lower bound", ok,
             f"mean {mean['mean']:.4f} +- {mean['stderr']:.4f}; min estimate/bound {lb['min_ratio']:.4f}"
             f" (need >= 0.99), violations {lb['violations']}")


def test_criterion_11_size_biased_order(reports, capsys):
    rep, _ = reports("cm_explore.cfg", "cm-explore")
    b = _blocks(rep, "size_biased_order")[0]
    _verdict(capsys, 11, "size-biased order of degrees (3,2,1)", b["pass"] and b["draws"] == 10**5,
             f"{sum(r['pass'] for r in b['rows'])}/6 permutations within 3 sigma")


def test_criterion_12_exploration(reports, capsys):
    rep, _ = reports("cm_explore.cfg", "cm-explore")
    surplus = _blocks(rep, "two_vertex_surplus")[0]
    deg = _blocks(rep, "degree_preservation")[0]
    sizes = _blocks(rep, "component_sizes")[0]
    ok = surplus["pass"] and deg["pass"] and sizes["pass"] and surplus["runs"] == 10**5 \
        and sizes["runs"] == 100 and sizes["n"] == 10**4
    rows = ", ".join(f"surplus {r['surplus']}: {r['empirical']:.4f} vs {r['expected']:.4f}" for r in surplus["rows"])
    _verdict(capsys, 12, "exploration correctness", ok,
             f"{rows}; degrees preserved {deg['pass']}; sizes sum to n {sizes['pass']}")


def test_criterion_13_height_stability(reports, capsys):
    rep, _ = reports("height_stability.cfg", "height-stability")
    b = rep["blocks"][0]
    ok = b["pass"] and b["n"] == [10**4, 4 * 10**4] and len(b["distances"]) == 5
    _verdict(capsys, 13, "rescaled height marginals at n and 4n", ok,
             f"median KS {b['median']:.4f} (limit 0.05), per seed {np.round(b['distances'], 4).tolist()}; "
             f"jittered median {rep['supplementary']['jittered_median']:.4f}")


def test_report_is_deterministic(tmp_path):
    from supergw import cli
    cfg = os.path.join(CONFIGS, "binary.cfg")
    for d in ("a", "b"):
        assert cli.run(["pathwise-law", "--config", cfg, "--seed", "7", "--out", str(tmp_path / d)]) in (0, 1)
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
