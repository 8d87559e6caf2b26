"""Acceptance suite: one PASS/FAIL line per criterion, printed in the pytest summary.

The heavy criteria (4-7, 9) share one suite of ten synthetic graphs
(n=2000, average degree about 20, edge label correlation 0.227, skewed
labels), each evaluated at training fractions 0.2 and 0.8 with the default
hyperparameters (M=10, l=5, itr=50, t=3), plus the MGB relational-feature
ablations. The suite is computed once per session.

Run standalone with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import time

import networkx as nx
import numpy as np
import pytest
from scipy.stats import binomtest

from relboost.boosting import fit_gb, residuals
from relboost.harness import Params, run_ablation, run_cell, run_experiment
from relboost.regtree import fit_tree
from relboost.synthgen import SynthConfig, generate

SUITE_SEEDS = tuple(range(10))
SUITE_FRACTIONS = (0.2, 0.8)
ABLATIONS = ("rf1", "rf4", "all-rf4", "rf2+rf3")


def _sse(v):
    return float(np.sum((v - v.mean()) ** 2)) if v.size else 0.0


def _exhaustive_gain(X, y):
    """Best SSE reduction over every feature and every midpoint threshold."""
    best = 0.0
    parent = _sse(y)
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for thr in (vals[:-1] + vals[1:]) / 2.0:
            left = X[:, f] <= thr
            best = max(best, parent - _sse(y[left]) - _sse(y[~left]))
    return best


def _edge_pearson(g):
    a = np.r_[g.y[g.edges[:, 0]], g.y[g.edges[:, 1]]]
    b = np.r_[g.y[g.edges[:, 1]], g.y[g.edges[:, 0]]]
    return float(np.corrcoef(a, b)[0, 1])


@pytest.fixture(scope="module")
def suite():
    start = time.perf_counter()
    out = {"graphs": {}, "reports": {}, "ablations": {}}
    for s in SUITE_SEEDS:
        g, _ = generate(SynthConfig(seed=s))
        out["graphs"][s] = g
        out["reports"][s] = run_experiment(g, fractions=SUITE_FRACTIONS, seed=s, audit=True)
        out["ablations"][s] = run_ablation(g, ABLATIONS, seed=s, fractions=SUITE_FRACTIONS)
    out["seconds"] = time.perf_counter() - start
    return out


def _cells(suite, model, fraction, mask=None, source="reports"):
    """RMSE per (seed, fold), in a fixed order."""
    vals = []
    for s in SUITE_SEEDS:
        rows = [r for r in suite[source][s].rows
                if r.model == model and r.fraction == fraction and (mask is None or r.mask == mask)]
        vals.extend(r.rmse for r in sorted(rows, key=lambda r: r.fold))
    return np.array(vals)


class TestWeakLearner:
    def test_c1_exhaustive_split_oracle(self, verdict):
        rng = np.random.default_rng(1)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(2, 51))
            d = int(rng.integers(1, 5))
            # Coarse integer features produce ties and repeated values.
            X = rng.integers(0, 6, size=(n, d)).astype(float) + rng.normal(size=(n, d)) * (rng.random() < 0.5)
            y = rng.normal(size=n) * 10 ** rng.uniform(-2, 4)
            tree = fit_tree(X, y, max_leaves=2)
            oracle = _exhaustive_gain(X, y)
            if tree.n_leaves == 1:
                got = 0.0
            else:
                left = X[:, tree.feature[0]] <= tree.threshold[0]
                got = _sse(y) - _sse(y[left]) - _sse(y[~left])
            worst = max(worst, abs(got - oracle) / max(1.0, _sse(y)))
        secs = time.perf_counter() - start
        ok = worst <= 1e-9 and secs < 10
        verdict(1, "weak-learner oracle", ok,
                f"max |gain - exhaustive| / max(1, SSE) = {worst:.2e} (tol 1e-9), {secs:.2f}s (< 10s)")
        assert ok


class TestGradient:
    def test_c2_residual_is_negative_gradient(self, verdict):
        rng = np.random.default_rng(2)
        y = rng.normal(0, 10, 1000)
        F = rng.normal(0, 10, 1000)
        start = time.perf_counter()

        def loss(f):
            return 0.5 * np.sum((y - f) ** 2)

        h = 1e-4
        fd = np.empty_like(F)
        for i in range(F.size):
            up, dn = F.copy(), F.copy()
            up[i] += h
            dn[i] -= h
            fd[i] = -(loss(up) - loss(dn)) / (2 * h)
        err = float(np.max(np.abs(residuals(y, F) - fd)))
        secs = time.perf_counter() - start
        ok = err <= 1e-6 and secs < 1
        verdict(2, "gradient identity", ok, f"max |r - (-dL/dF)| = {err:.2e} (tol 1e-6), {secs:.2f}s (< 1s)")
        assert ok


class TestBoostingProgress:
    def test_c3_training_rmse_drops(self, verdict):
        start = time.perf_counter()
        ratios = []
        for s in SUITE_SEEDS:
            g, _ = generate(SynthConfig(seed=s))
            staged = fit_gb(g.X, g.y, 10, 5).staged_predict(g.X)
            r0 = np.sqrt(np.mean((g.y - staged[0]) ** 2))
            r10 = np.sqrt(np.mean((g.y - staged[10]) ** 2))
            ratios.append(r10 / r0)
        secs = time.perf_counter() - start
        ok = all(r < 1 for r in ratios) and secs < 120
        verdict(3, "boosting progress", ok,
                f"RMSE(M=10)/RMSE(stage 0) max {max(ratios):.4f} over {len(ratios)} seeds, {secs:.1f}s (< 120s)")
        assert ok


class TestModelOrdering:
    def test_c4_mgb_beats_gb_and_rgb_not_worse(self, suite, verdict):
        gb = _cells(suite, "GB", 0.2)
        rgb = _cells(suite, "RGB", 0.2)
        mgb = _cells(suite, "MGB", 0.2)
        wins = int(np.sum(mgb < gb))
        n = int(np.sum(mgb != gb))
        p = binomtest(wins, n, alternative="greater").pvalue if n else 1.0
        ok_mgb = mgb.mean() < gb.mean() and p < 0.05
        ok_rgb = rgb.mean() <= gb.mean()
        secs = suite["seconds"]
        ok = ok_mgb and ok_rgb and secs < 1800
        verdict(4, "fraction-0.2 ordering", ok,
                f"mean RMSE GB {gb.mean():.4g}, RGB {rgb.mean():.4g}, MGB {mgb.mean():.4g}; "
                f"MGB<GB in {wins}/{n} paired folds, sign test p={p:.4f} (< 0.05); "
                f"RGB<=GB {ok_rgb}; suite {secs / 60:.1f} min (< 30)")
        assert ok


class TestFractionTrend:
    def test_c5_more_labels_not_worse(self, suite, verdict):
        parts, ok = [], True
        for m in ("GB", "RGB", "MGB"):
            lo, hi = _cells(suite, m, 0.2).mean(), _cells(suite, m, 0.8).mean()
            ok &= hi <= lo
            parts.append(f"{m} {lo:.4g} -> {hi:.4g}")
        verdict(5, "fraction trend", ok, "mean RMSE 0.2 -> 0.8: " + "; ".join(parts))
        assert ok


class TestAblation:
    def test_c6_full_feature_set_best(self, suite, verdict):
        parts, ok = [], True
        for f in SUITE_FRACTIONS:
            full = _cells(suite, "MGB", f, "all").mean()
            cmp = []
            for mask in ABLATIONS:
                v = _cells(suite, "MGB", f, mask, source="ablations").mean()
                ok &= full <= v
                cmp.append(f"{mask} {v:.4g}")
            parts.append(f"f={f}: all {full:.4g} vs " + ", ".join(cmp))
        verdict(6, "ablation ordering", ok, "; ".join(parts))
        assert ok


class TestConvergence:
    def test_c7_collective_inference_converges(self, suite, verdict):
        rates, parts = {}, []
        for model, algo in (("RGB", "ICA"), ("MGB", "ICA2")):
            runs = [d for s in SUITE_SEEDS for k, d in suite["reports"][s].diagnostics.items()
                    if k[0] == model]
            done = [d["converged"] for d in runs]
            rates[algo] = float(np.mean(done))
            stuck = [d["deltas"][-1] / d["tolerance"] for d in runs if not d["converged"]]
            tail = f", non-converged final delta/tol median {np.median(stuck):.3g}" if stuck else ""
            parts.append(f"{algo} {sum(done)}/{len(done)} runs converged{tail}")
        ok = all(r >= 0.9 for r in rates.values())
        verdict(7, "CI convergence", ok, "; ".join(parts) + " (need >= 90%)")
        assert ok


class TestDegenerateGraph:
    def test_c8_edgeless_models_agree(self, verdict):
        checked, ok = 0, True
        for s in range(3):
            g, _ = generate(SynthConfig(n=400, seed=s))
            g = g.from_arrays(g.X, g.y, np.empty((0, 2), dtype=np.int64))
            rng = np.random.default_rng(s)
            for frac in (0.2, 0.5, 0.8):
                known = rng.random(g.n) < frac
                preds = {m: run_cell(g, known, m, Params(), s).predictions for m in ("GB", "RGB", "MGB")}
                ok &= np.array_equal(preds["GB"], preds["RGB"]) and np.array_equal(preds["GB"], preds["MGB"])
                checked += 1
        verdict(8, "edgeless equivalence", ok, f"GB == RGB == MGB bitwise in {checked} edgeless cells")
        assert ok


class TestDeterminismAndLeakage:
    def test_c9_reproducible_and_leak_free(self, suite, verdict):
        s = SUITE_SEEDS[0]
        g = suite["graphs"][s]
        a = run_experiment(g, fractions=(0.2,), seed=s).to_csv(timing=False)
        b = run_experiment(g, fractions=(0.2,), seed=s).to_csv(timing=False)
        ref = suite["reports"][s]
        ref_rows = [r for r in ref.rows if r.fraction == 0.2]
        same_as_suite = a.splitlines()[1:] == [
            f"{r.model},{r.mask},{r.fraction!r},{r.fold},{r.seed},{r.rmse!r}," for r in ref_rows]
        audited = sum(d["audited"] for s in SUITE_SEEDS for d in suite["reports"][s].diagnostics.values())
        total = sum(len(suite["reports"][s].rows) for s in SUITE_SEEDS)
        ok = a == b and same_as_suite and audited == total
        verdict(9, "determinism and leakage", ok,
                f"repeat report byte-identical {a == b}, matches audited suite run {same_as_suite}; "
                f"poisoning audit passed on {audited}/{total} cells")
        assert ok


class TestSynthCalibration:
    def test_c10_generator_hits_targets(self, verdict):
        worst = {"degree": 0.0, "clustering": 0.0, "corr": 0.0}
        in_range = True
        for s in range(5):
            g, _ = generate(SynthConfig(seed=s))
            deg = 2.0 * g.n_edges / g.n
            clus = nx.average_clustering(g.to_networkx())
            r = _edge_pearson(g)
            worst["degree"] = max(worst["degree"], abs(deg - 19.727) / 19.727)
            worst["clustering"] = max(worst["clustering"], abs(clus - 0.54))
            worst["corr"] = max(worst["corr"], abs(r - 0.227))
            in_range &= bool(g.y.min() >= 30 - 1e-6 and g.y.max() <= 1.054e9 * (1 + 1e-12))
        ok = (worst["degree"] <= 0.10 and worst["clustering"] <= 0.1
              and worst["corr"] <= 0.05 and in_range)
        verdict(10, "synthetic calibration", ok,
                f"worst rel. degree error {worst['degree']:.3f} (<= 0.10), clustering "
                f"{worst['clustering']:.3f} (<= 0.1), edge r {worst['corr']:.4f} (<= 0.05), "
                f"labels in [30, 1.054e9] {in_range}; 5 seeds")
        assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
