"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Accuracy-table criteria run at 30 x 30 x 30 with side width 30; see the
README for why this desk scale was chosen.
"""
import itertools
import time

import numpy as np
import pytest

from cmtf.bench import ClusteringConfig, ExperimentPlan, run_accuracy_tables, run_clustering_demo, run_missing_curve
from cmtf.evaluation import fms, normalize_model, paired_t_test
from cmtf.model import CmtfModel, CoupledDataset, CouplingSpec, flatten, gradient, objective, random_model, unflatten
from cmtf.solvers import cmtf_als, cmtf_opt
from cmtf.synth import ScenarioConfig, gen_mask, gen_scenario
from cmtf.tensor import khatri_rao, khatri_rao_complement, kruskal_to_full, matricize

from conftest import brute_fms, brute_khatri_rao, brute_kruskal, brute_matricize

DESK = dict(shape=(30, 30, 30), side_dim=30, replicates=30)


def _cell(agg, algorithm, **keys):
    rows = [r for r in agg if r["algorithm"] == algorithm and all(r[k] == v for k, v in keys.items())]
    assert len(rows) == 1
    return rows[0]


def test_criterion_1_gradient_matches_finite_differences(acceptance):
    start = time.perf_counter()
    worst = 0.0
    for i in range(20):
        scenario, masked = 1 + i % 3, i % 2 == 1
        gt = gen_scenario(ScenarioConfig(scenario=scenario, shape=(4, 5, 3), side_dim=3, eta=0.1, seed=i))
        mask = gen_mask((4, 5, 3), 0.3, i) if masked else None
        data = CoupledDataset(gt.data.tensor, gt.data.sides, mask)
        model = random_model(data.spec(3 + i % 2), i)
        spec, x = model.spec, flatten(model)
        # f is quadratic along every coordinate, so central differences are
        # exact up to rounding for any step
        h = 1e-3
        fd = np.empty_like(x)
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = h
            fd[k] = (objective(data, unflatten(x + e, spec)) - objective(data, unflatten(x - e, spec))) / (2 * h)
        g = gradient(data, model)
        worst = max(worst, float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), np.finfo(float).tiny))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 10
    acceptance(1, ok, f"max relative gradient error {worst:.2e} (<= 1e-6), {elapsed:.1f}s (< 10s)")
    assert ok


def test_criterion_2_noiseless_exact_recovery(acceptance):
    good = {"opt": 0, "als": 0}
    for seed in range(10):
        gt = gen_scenario(ScenarioConfig(eta=0.0, seed=seed))
        truth = normalize_model(gt.model)
        for name, solver in (("opt", cmtf_opt), ("als", cmtf_als)):
            result = solver(gt.data, 3)
            score = fms(truth, normalize_model(result.model)).score
            good[name] += result.objective <= 1e-8 and score >= 0.9999
    ok = good["opt"] >= 9 and good["als"] >= 9
    acceptance(2, ok, f"exact recovery OPT {good['opt']}/10, ALS {good['als']}/10 (need >= 9/10 each)")
    assert ok


@pytest.fixture(scope="module")
def scenario1_tables(tmp_path_factory):
    plan = ExperimentPlan(scenarios=(1,), etas=(0.1,), fit_ranks=(3, 4), **DESK)
    start = time.perf_counter()
    rows, agg = run_accuracy_tables(plan, tmp_path_factory.mktemp("tables1"))
    return agg, time.perf_counter() - start


def test_criterion_3_correct_rank_cell(acceptance, scenario1_tables):
    agg, elapsed = scenario1_tables
    opt = _cell(agg, "opt", fit_rank=3)["success_pct"]
    als = _cell(agg, "als", fit_rank=3)["success_pct"]
    ok = opt >= 90 and als >= 90 and elapsed < 300
    acceptance(3, ok, f"R=3 success OPT {opt:.1f}%, ALS {als:.1f}% (need >= 90% each); "
                      f"both ranks took {elapsed:.0f}s")
    assert ok


def test_criterion_4_overfactoring_separation(acceptance, scenario1_tables, tmp_path):
    agg1, elapsed1 = scenario1_tables
    plan = ExperimentPlan(scenarios=(3,), etas=(0.1,), fit_ranks=(4,), **DESK)
    start = time.perf_counter()
    _, agg3 = run_accuracy_tables(plan, tmp_path)
    elapsed = elapsed1 + time.perf_counter() - start
    parts, ok = [], elapsed < 600
    for scenario, agg in ((1, agg1), (3, agg3)):
        opt = _cell(agg, "opt", fit_rank=4)["success_pct"]
        als = _cell(agg, "als", fit_rank=4)["success_pct"]
        ok &= opt >= 80 and opt - als >= 50
        parts.append(f"scenario {scenario} OPT {opt:.1f}% vs ALS {als:.1f}%")
    acceptance(4, ok, "; ".join(parts) + f" (need OPT >= 80%, gap >= 50 points); {elapsed:.0f}s")
    assert ok


def test_criterion_5_random_integer_weights(acceptance, tmp_path):
    plan = ExperimentPlan(scenarios=(1,), etas=(0.1, 0.25, 0.35), fit_ranks=(4,), weights="random-integer", **DESK)
    _, agg = run_accuracy_tables(plan, tmp_path)
    opt = _cell(agg, "opt", eta=0.1)["success_pct"]
    als = _cell(agg, "als", eta=0.1)["success_pct"]
    means = [(eta, _cell(agg, "opt", eta=eta)["mean_fms"], _cell(agg, "als", eta=eta)["mean_fms"])
             for eta in plan.etas]
    ok = opt - als >= 40 and all(o > a for _, o, a in means)
    detail = ", ".join(f"eta {e}: {o:.3f} > {a:.3f}" for e, o, a in means)
    acceptance(5, ok, f"eta 0.1 success OPT {opt:.1f}% vs ALS {als:.1f}% (gap >= 40); mean FMS {detail}")
    assert ok


def test_criterion_6_missing_data_curve(acceptance):
    start = time.perf_counter()
    _, curve = run_missing_curve([0.3, 0.5, 0.7, 0.85], replicates=10, shape=(20, 20, 20), side_dim=20, rank=3,
                                 eta=0.0, seed=0)
    elapsed = time.perf_counter() - start
    by = {c["fraction"]: c for c in curve}
    cp50, cp85 = by[0.5]["tcs_cp"], by[0.85]["tcs_cp"]
    cmtf_max = max(c["tcs_cmtf"] for c in curve)
    ok = cp50 <= 0.05 and cp85 >= 5 * cp50 and cmtf_max <= 0.05 and elapsed < 300
    acceptance(6, ok, f"CP TCS {cp50:.2e} at 0.5, {cp85:.3g} at 0.85; CMTF max TCS {cmtf_max:.2e}; {elapsed:.0f}s")
    assert ok


def test_criterion_7_clustering(acceptance):
    hits = {"svd": 0, "cp": 0, "cmtf": 0}
    joint = 0
    for seed in range(10):
        _, purity, _ = run_clustering_demo(ClusteringConfig(seed=seed))
        svd_ok, cp_ok, cmtf_ok = purity["svd"] <= 0.6, purity["cp"] <= 0.6, purity["cmtf"] >= 0.95
        hits["svd"] += svd_ok
        hits["cp"] += cp_ok
        hits["cmtf"] += cmtf_ok
        joint += svd_ok and cp_ok and cmtf_ok
    ok = all(v >= 8 for v in hits.values())
    acceptance(7, ok, f"seeds meeting SVD <= 0.6: {hits['svd']}/10, CP <= 0.6: {hits['cp']}/10, "
                      f"CMTF >= 0.95: {hits['cmtf']}/10 (need >= 8 each; all three at once: {joint}/10)")
    assert ok


def test_criterion_8_als_monotone(acceptance):
    worst, bad = 0.0, 0
    for i in range(50):
        scenario = 1 + i % 3
        gt = gen_scenario(ScenarioConfig(scenario=scenario, shape=(8, 7, 6), side_dim=5, eta=0.1 + 0.05 * (i % 4),
                                         weight_mode="unit" if i % 2 else "random-integer", seed=100 + i))
        init = "random" if i % 5 == 0 else "svd"
        trace = np.array(cmtf_als(gt.data, 3 + i % 3, init=init, random_state=i).objective_trace)
        rises = (trace[1:] - trace[:-1]) / trace[:-1]
        worst = max(worst, float(rises.max()) if rises.size else 0.0)
        bad += bool(np.any(rises > 1e-12))
    ok = bad == 0
    acceptance(8, ok, f"{50 - bad}/50 ALS traces non-increasing; largest relative rise {worst:.1e} (<= 1e-12)")
    assert ok


def test_criterion_9_oracle_equivalences(acceptance):
    rng = np.random.default_rng(9)
    checks = 0
    for dims in itertools.product(range(1, 4), repeat=3):
        for rank in range(1, 4):
            factors = [rng.standard_normal((d, rank)) for d in dims]
            np.testing.assert_allclose(khatri_rao(factors[0], factors[1]), brute_khatri_rao(factors[0], factors[1]))
            x = kruskal_to_full(factors)
            np.testing.assert_allclose(x, brute_kruskal(factors), atol=1e-12)
            for mode in range(3):
                np.testing.assert_array_equal(matricize(x, mode), brute_matricize(x, mode))
                np.testing.assert_allclose(matricize(x, mode), factors[mode] @ khatri_rao_complement(factors, mode).T,
                                           atol=1e-12)
            checks += 1
    worst_fms = 0.0
    for dims in itertools.product(range(1, 4), repeat=3):
        for rank, est_rank in ((1, 1), (1, 3), (2, 2), (2, 3), (3, 3)):
            truth = random_model(CouplingSpec(dims, rank, (0,), ((2,),)), rng)
            est = random_model(CouplingSpec(dims, est_rank, (0,), ((2,),)), rng)
            got = fms(normalize_model(truth), normalize_model(est)).score
            worst_fms = max(worst_fms, abs(got - brute_fms(truth, est)))
    # two-sided p-values from mpmath quadrature of the Student t density
    oracle = [([0.99, 0.98, 0.97, 0.995, 0.96], [0.5, 0.7, 0.3, 0.9, 0.2], 0.02005382256826713),
              ([1.0, 2.0, 3.0, 4.0], [1.1, 1.9, 3.2, 3.7], 0.83608322580796325),
              ([5.0, 5.1], [1.0, 4.0], 0.32915276390193131)]
    worst_p = max(abs(paired_t_test(a, b).pvalue - p) for a, b, p in oracle)
    ok = worst_fms <= 1e-12 and worst_p <= 1e-6
    acceptance(9, ok, f"{checks} Khatri-Rao/unfolding/Kruskal instances exact; FMS max deviation {worst_fms:.1e}; "
                      f"t-test max p deviation {worst_p:.1e} (<= 1e-6)")
    assert ok
