import json
import math
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest
from scipy.special import gammaln, logsumexp

from carleman_gen import DefiningSequence, MandelbrojtEvaluator
from carleman_gen.cli import run
from carleman_gen.counterexample_lab import build_violation, control_spectrum, divergence_demo
from carleman_gen.diagonal_semigroup import DiagonalOperator, orbit, spectral_projection
from carleman_gen.growth_conditions import (
    Verdict,
    binomial_log_sums,
    check_binomial,
    check_growth,
    recheck_witnesses,
    verify_inequality,
)
from carleman_gen.spectral_region import SpectrumModel

criterion = pytest.mark.criterion

CANONICAL = {
    "k06": ({"c": 1, "p": 0.6, "q": 1, "r0": 0}, "generates"),
    "sqrt": ({"c": 1, "p": 0.5, "q": 1, "r0": 0}, "does-not-generate"),
    "imag": ({"c": 0, "p": 1, "q": 1, "r0": 0}, "does-not-generate"),
}
GRID_5 = [0.25, 0.5, 1, 2, 4]
T_GRID_5 = [0.5, 1, 2, 4, 8]


def classify_config(path: Path, rule: dict, kind: str, sequence: dict) -> Path:
    doc = {
        "schema_version": 1,
        "sequence": sequence,
        "evaluator": {"kind": kind},
        "spectrum": {"rule": rule},
        "truncation": {"K": 100_000, "N_max": 64},
        "grids": {"s": GRID_5, "t": T_GRID_5},
        "output": str(path.with_suffix("")),
    }
    path.write_text(json.dumps(doc))
    return path


def run_criterion6(root: Path, kind: str) -> tuple[dict, float]:
    """Classify runs on the three canonical spectra; reports and wall time."""
    root.mkdir(parents=True, exist_ok=True)
    reports = {}
    start = time.perf_counter()
    for name, (rule, _) in CANONICAL.items():
        cfg = classify_config(root / f"{name}.json", rule, kind, {"preset": "gevrey", "beta": 2})
        run(["classify", "--config", str(cfg)])
        reports[name] = json.loads((root / name / "classify.json").read_text())
    return reports, time.perf_counter() - start


@pytest.fixture(scope="module")
def series_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("c6") / "series"
    reports, seconds = run_criterion6(root, "series")
    return root, reports, seconds


def verdict_summary(report: dict) -> dict:
    return {
        "decide": report["decide_beurling"],
        "orbits": [(c["vector"], c["t"], c["verdict"]) for c in report["orbit_classes"]],
        "consistent": report["consistency"]["consistent"],
        "members": [m["beurling_member_all_t"] for m in report["consistency"]["matrix"]],
    }


@criterion(1, "Mandelbrojt exactness for n!")
def test_c1_mandelbrojt_exactness():
    start = time.perf_counter()
    ev = MandelbrojtEvaluator(DefiningSequence.factorial())
    lam = np.concatenate([[0.0], np.logspace(-3, math.log10(500.0), 199)])
    m = ev.eval_M(lam)
    elapsed = time.perf_counter() - start
    assert lam.size == 200
    assert np.all(np.abs(m - lam) <= 1e-10 * np.maximum(1.0, lam))
    assert elapsed < 1.0


@criterion(2, "Gevrey 2 ln T against direct summation")
def test_c2_oracle_equivalence():
    mpmath.mp.dps = 50
    oracle = {}
    for lam in (1, 4, 25, 100):
        total = mpmath.fsum(mpmath.mpf(lam) ** n / mpmath.factorial(n) ** 2 for n in range(300))
        oracle[lam] = float(mpmath.log(total))
    assert oracle[4] == pytest.approx(float(mpmath.log(mpmath.besseli(0, 4))), rel=1e-15)
    start = time.perf_counter()
    ev = MandelbrojtEvaluator(DefiningSequence.gevrey(2))
    got = {lam: ev.eval_log_T(float(lam)) for lam in oracle}
    elapsed = time.perf_counter() - start
    for lam, ref in oracle.items():
        assert got[lam] == pytest.approx(ref, rel=1e-10)
    assert elapsed < 1.0


@criterion(3, "binomial identity for n!")
def test_c3_binomial_identity():
    seq = DefiningSequence.factorial()
    logb = binomial_log_sums(seq, 64)
    n = np.arange(65)
    assert np.all(np.abs(np.expm1(logb - n * math.log(2.0))) <= 1e-10)
    for cond in ("BC", "SBC"):
        rep = check_binomial(seq, cond, 64)
        assert rep.verdict is Verdict.HOLDS
        assert rep.witnesses["h"] == pytest.approx(2.0, rel=1e-12)
        # witnesses carry a 1e-9 safety margin in the log
        assert rep.witnesses["l"] == pytest.approx(1.0, rel=1e-8)


def literal_log_b(mu: np.ndarray, n: int) -> float:
    k = np.arange(n + 1)
    return float(logsumexp(mu[n] - mu[k] - mu[n - k]))


@criterion(4, "growth-condition suite")
def test_c4_condition_suite():
    N = 200
    holding = {
        "gevrey1.5": DefiningSequence.gevrey(1.5),
        "gevrey2": DefiningSequence.gevrey(2),
        "gevrey3": DefiningSequence.gevrey(3),
        "exp_square": DefiningSequence.exp_square(),
    }
    start = time.perf_counter()
    reports = {name: (check_growth(seq, "SGR", N), check_binomial(seq, "BC", N)) for name, seq in holding.items()}
    fact = check_growth(DefiningSequence.factorial(), "SGR", N)
    const = check_growth(DefiningSequence.constant(), "WGR", N)
    rechecked = all(recheck_witnesses(r, holding[name]) for name, pair in reports.items() for r in pair)
    elapsed = time.perf_counter() - start

    assert rechecked
    n = np.arange(N + 1)
    for name, (sgr, bc) in reports.items():
        assert sgr.verdict is Verdict.HOLDS and bc.verdict is Verdict.HOLDS, name
        mu = np.asarray(holding[name].log_m(n), dtype=float)
        # m_n >= c alpha^n n! for every grid alpha
        for a, log_c in zip(sgr.witnesses["alpha_grid"], sgr.witnesses["log_c"]):
            assert np.all(log_c + n * math.log(a) + gammaln(n + 1.0) <= mu), (name, a)
        # b_n >= l h^n
        for i in range(N + 1):
            assert bc.witnesses["log_l"] + i * bc.witnesses["log_h"] <= literal_log_b(mu, i), (name, i)
    assert fact.verdict is Verdict.FAILS
    assert const.verdict is Verdict.FAILS
    assert elapsed < 10.0


@criterion(5, "derived inequalities BC2 and SGR consequence")
def test_c5_derived_inequalities():
    ev = MandelbrojtEvaluator(DefiningSequence.gevrey(2))
    bc = check_binomial(ev.sequence, "BC", 200)
    params = {"h": bc.witnesses["h"], "log_l": bc.witnesses["log_l"], "n_values": [1, 2, 3, 4]}
    rep = verify_inequality(ev, "BC2", params, np.linspace(0.0, 1e4, 100), slack=1e-8)
    assert rep.violations == 0
    y = np.linspace(0.0, 100.0, 201)
    for alpha in (1.0, 4.0, 16.0):
        sgr = verify_inequality(ev, "SGR-consequence", {"alpha": alpha}, y)
        assert sgr.holds and sgr.R is not None and math.isfinite(sgr.R)


@criterion(6, "criterion, orbit classes and domain tests agree")
def test_c6_theorem_cross_validation(series_run):
    _, reports, seconds = series_run
    for name, (_, expected) in CANONICAL.items():
        rep = reports[name]
        assert rep["decide_beurling"] == expected, name
        matrix = rep["consistency"]["matrix"]
        assert len(matrix) == 3
        assert rep["consistency"]["consistent"], name
        if expected == "generates":
            for row in matrix:
                assert row["beurling_member_all_t"] and all(row["in_domain_all_s"].values()), (name, row["vector"])
        else:
            # some test vector leaves the Beurling class and the domain
            assert any(not row["beurling_member_all_t"] and not all(row["in_domain_all_s"].values())
                       for row in matrix), name
        assert len(rep["domain_tests"]) == 3 * 5 * 5
    assert seconds < 60.0


@criterion(7, "verdicts unchanged under the closed-form proxy")
def test_c7_proxy_invariance(series_run, tmp_path):
    _, series_reports, _ = series_run
    proxy_reports, _ = run_criterion6(tmp_path / "proxy", "proxy")
    for name in CANONICAL:
        assert verdict_summary(proxy_reports[name]) == verdict_summary(series_reports[name]), name

    rule = {"c": 1, "p": 3, "q": 1, "r0": 0, "scale": "log"}
    summaries = {}
    for kind in ("series", "proxy"):
        cfg = classify_config(tmp_path / f"exp_square_{kind}.json", rule, kind, {"preset": "exp_square"})
        run(["classify", "--config", str(cfg)])
        summaries[kind] = verdict_summary(json.loads((tmp_path / f"exp_square_{kind}" / "classify.json").read_text()))
    assert summaries["series"] == summaries["proxy"]
    assert summaries["series"]["decide"] == "generates"


@criterion(8, "counterexample reproduction")
def test_c8_counterexample():
    start = time.perf_counter()
    ev = MandelbrojtEvaluator(DefiningSequence.gevrey(2))
    cons = build_violation(ev, 1.0, "unbounded-re", K=10_000)
    demo = divergence_demo(ev, cons, 1e6)
    control = divergence_demo(ev, control_spectrum(cons.K), 1e6, t=cons.t)
    elapsed = time.perf_counter() - start
    assert cons.t == 0.5 and demo.t == 0.5
    assert demo.crossing_index is not None and demo.log_partial_sums[-1] > math.log(1e6)
    assert demo.verdict == "diverging"
    assert np.all(np.diff(demo.log_terms[-cons.K // 4:]) > 0)
    assert control.crossing_index is None and control.verdict == "bounded"
    assert elapsed < 30.0


@criterion(9, "semigroup law and projection algebra")
def test_c9_semigroup_and_projections():
    rng = np.random.default_rng(20240601)
    K = 64
    for _ in range(1000):
        pts = -rng.uniform(0, 20, K) + 1j * rng.uniform(-50, 50, K)
        op = DiagonalOperator(SpectrumModel.from_points(pts))
        f = rng.normal(size=K) + 1j * rng.normal(size=K)
        s, t = rng.uniform(0, 2, 2)
        one = orbit(op, f, s + t)
        assert np.all(np.abs(orbit(op, orbit(op, f, s), t) - one) <= 1e-12 * np.abs(one))

        a, b = rng.uniform(-20, 0), rng.uniform(-50, 50)
        d1 = spectral_projection(op, lambda z: z.real <= a)
        d2 = spectral_projection(op, lambda z: z.imag >= b)
        both = spectral_projection(op, lambda z: (z.real <= a) & (z.imag >= b))
        assert d1 @ d2 == both
        assert np.all(np.abs(d1(d2(f)) - both(f)) <= 1e-12 * np.abs(f))
        rest = spectral_projection(op, lambda z: z.real > a)
        assert d1.disjoint(rest) and np.all(d1(rest(f)) == 0)


@criterion(10, "bit-identical reports on repeated runs")
def test_c10_determinism(series_run):
    root, _, _ = series_run
    before = {p.relative_to(root): p.read_bytes() for p in root.rglob("*") if p.is_file()}
    assert sum(p.name == "classify.json" for p in before) == 3
    run_criterion6(root, "series")
    after = {p.relative_to(root): p.read_bytes() for p in root.rglob("*") if p.is_file()}
    assert after.keys() == before.keys()
    for rel, data in before.items():
        assert after[rel] == data, rel
