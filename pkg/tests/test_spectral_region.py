import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carleman_gen import DefiningSequence, MandelbrojtEvaluator, ProxyEvaluator
from carleman_gen.spectral_region import (
    GenerationVerdict,
    Mode,
    SpectrumModel,
    a_star,
    boundary_sample,
    decide,
    region_member,
    thread_count,
    write_boundary_csv,
)

G2 = DefiningSequence.gevrey(2)
GEN = GenerationVerdict


@pytest.fixture(scope="module")
def series():
    return MandelbrojtEvaluator(G2)


@pytest.fixture(scope="module")
def proxy():
    return ProxyEvaluator(G2)


@pytest.fixture(scope="module")
def fact():
    return MandelbrojtEvaluator(DefiningSequence.factorial())


def canonical():
    return {
        "k06": SpectrumModel.rule_family(c=1, p=0.6, q=1),
        "sqrt": SpectrumModel.rule_family(c=1, p=0.5, q=1),
        "imag": SpectrumModel.rule_family(c=0, p=1, q=1),
    }


def test_region_member_examples(fact, series):
    assert region_member(-5.0, 0.0, 1.0, series)
    assert not region_member(1j * math.e, 0.0, 1.0, fact)
    assert region_member(-3 + 2j, 0.0, 1.0, fact)
    with pytest.raises(ValueError):
        region_member(0j, 0.0, -1.0, fact)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(0.01, 50), st.floats(-20, 20), st.floats(-5, 5), st.floats(0, 5), st.floats(0, 5))
def test_region_member_monotone(re, im, a, da, b, db):
    ev = ProxyEvaluator(G2)
    lam = complex(re, im)
    if region_member(lam, a, b + db, ev):
        assert region_member(lam, a, b, ev)
    if region_member(lam, a, b, ev):
        assert region_member(lam, a + abs(da), b, ev)


def test_a_star_linear_spectrum(proxy):
    spec = SpectrumModel.rule_family(c=1, p=1, q=1, K=10_000)
    res = a_star(spec, 1.0, proxy)
    # -k + sqrt(k) is largest at k = 1 among integers
    assert res.value == 0.0 and res.attained_k == 1 and res.finite


def test_a_star_imaginary_axis_diverges(series):
    res = a_star(canonical()["imag"], 0.5, series)
    assert res.trend == "diverging" and not res.finite


@pytest.mark.parametrize("b", [1.0, 2.0, 3.0])
def test_a_star_brute_force(proxy, b):
    spec = canonical()["k06"]
    k = np.arange(1, spec.K + 1)
    brute = max(-float(x) ** 0.6 + b * math.sqrt(x) for x in k)
    res = a_star(spec, b, proxy)
    assert res.finite
    assert res.value == pytest.approx(brute, rel=1e-12, abs=1e-12)
    # the continuous maximum bounds the integer one
    kc = (0.5 * b / 0.6) ** 10
    assert res.value <= -kc ** 0.6 + b * math.sqrt(kc) + 1e-12


def test_a_star_finite_spectrum_is_stable(series):
    spec = SpectrumModel.from_points([-1 + 1j, 5j, -2 + 100j])
    res = a_star(spec, 1.0, series)
    assert res.trend == "stable"
    assert res.value == pytest.approx(max(p.real + series.eval_M(abs(p.imag)) for p in spec.points))


@pytest.mark.parametrize("kind", ["series", "proxy"])
def test_decide_canonical(kind, series, proxy):
    ev = series if kind == "series" else proxy
    specs = canonical()
    assert decide("Beurling", specs["k06"], ev).verdict is GEN.GENERATES
    assert decide("Beurling", specs["sqrt"], ev).verdict is GEN.DOES_NOT_GENERATE
    roumieu = decide("Roumieu", specs["sqrt"], ev)
    assert roumieu.verdict is GEN.GENERATES and 0 < roumieu.witness_b <= 1.0
    for mode in Mode:
        assert decide(mode, specs["imag"], ev).verdict is GEN.DOES_NOT_GENERATE


def test_decide_log_scale_exp_square():
    for ev in (MandelbrojtEvaluator(DefiningSequence.exp_square()), ProxyEvaluator(DefiningSequence.exp_square())):
        deep = SpectrumModel.rule_family(c=1, p=3, q=1, scale="log")
        shallow = SpectrumModel.rule_family(c=1, p=2, q=1, scale="log")
        assert decide(Mode.BEURLING, deep, ev).verdict is GEN.GENERATES
        assert decide(Mode.BEURLING, shallow, ev).verdict is GEN.DOES_NOT_GENERATE


def test_unbounded_real_part_never_generates(series):
    spec = SpectrumModel.rule_family(c=-1, p=0.5, q=1, K=1000)
    assert not spec.real_part_bounded_above
    assert decide(Mode.ROUMIEU, spec, series).verdict is GEN.DOES_NOT_GENERATE


def test_a_star_nondecreasing_in_b(series):
    for spec in canonical().values():
        vals = [row.value for row in decide(Mode.BEURLING, spec, series).a_of_b]
        assert np.all(np.diff(vals) >= 0)


def test_beurling_implies_roumieu(series, proxy):
    specs = list(canonical().values()) + [SpectrumModel.rule_family(c=1, p=1, q=1, K=10_000)]
    for ev in (series, proxy):
        for spec in specs:
            if decide(Mode.BEURLING, spec, ev).verdict is GEN.GENERATES:
                assert decide(Mode.ROUMIEU, spec, ev).verdict is GEN.GENERATES


def test_thread_count_independent(monkeypatch, series):
    spec = canonical()["sqrt"]
    monkeypatch.setenv("CARLEMAN_GEN_THREADS", "1")
    assert thread_count() == 1
    one = decide(Mode.ROUMIEU, spec, series).to_dict()
    monkeypatch.setenv("CARLEMAN_GEN_THREADS", "4")
    assert one == decide(Mode.ROUMIEU, spec, series).to_dict()


def test_bad_inputs(series):
    with pytest.raises(ValueError):
        decide(Mode.BEURLING, canonical()["k06"], series, [0.0, 1.0])
    with pytest.raises(ValueError):
        SpectrumModel.from_points([])
    with pytest.raises(ValueError):
        SpectrumModel.rule_family(K=0)
    with pytest.raises(ValueError):
        a_star(canonical()["k06"], 0.0, series)


def test_boundary_examples(fact, series, proxy):
    assert boundary_sample(0.0, 1.0, fact, 1.0, n_points=2) == [(-1.0, -1.0), (1.0, -1.0)]
    assert all(re == 2.0 for _, re in boundary_sample(2.0, 0.0, series, 5.0))
    assert boundary_sample(0.0, 1.0, proxy, (4.0, 4.0), n_points=2)[0] == (4.0, -2.0)


def test_boundary_csv(tmp_path, proxy):
    pairs = boundary_sample(0.0, 1.0, proxy, 9.0, n_points=7)
    path = tmp_path / "b.csv"
    write_boundary_csv(path, pairs)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["im", "re"]
    assert rows[1:] == [[f"{a:.15g}", f"{b:.15g}"] for a, b in pairs]
    assert np.allclose([[float(x) for x in r] for r in rows[1:]], pairs, rtol=1e-14, atol=0)
