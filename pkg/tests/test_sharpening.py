import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from dsharp import distributions as D
from dsharp.divergence import chisq_index
from dsharp.errors import DegenerateModelError, DomainError, InputError
from dsharp.quadrature import unit_rule
from dsharp.sharpening import (
    accept_reject_u,
    envelope,
    estimate_raw,
    eval_d,
    fit,
    make_dsharp,
    open_scores,
    open_select,
    resharpen,
    sample_dsharp,
    series_value,
)

from conftest import BUMP_BASE, GFR_BASE

# P(chi2_1 > 2): chance a single null coefficient clears the AIC charge.
P_CLEAR = stats.chi2.sf(2.0, 1)


# -- estimate_raw ------------------------------------------------------------

def test_raw_at_median_is_zero_for_odd_orders():
    base = D.normal(3, 2)
    raw = estimate_raw([3.0, 3.0], base, m_max=4)
    assert raw[0] == 0.0 and raw[2] == pytest.approx(0.0, abs=1e-14)
    assert raw[1] == pytest.approx(-math.sqrt(5) / 2, abs=1e-14)


def test_raw_rejects_single_point_and_nonfinite():
    with pytest.raises(InputError):
        estimate_raw([1.0], D.normal(), 4)
    with pytest.raises(InputError):
        estimate_raw([1.0, np.nan], D.normal(), 4)


def test_raw_is_order_independent():
    x = D.normal().sample(500, seed=3).values
    a = estimate_raw(x, D.normal(), 6)
    b = estimate_raw(x[::-1].copy(), D.normal(), 6)
    np.testing.assert_allclose(a, b, atol=1e-15)


def test_raw_under_null_is_small():
    base = D.logistic(1, 2)
    n = 10_000
    raw = estimate_raw(base.sample(n, seed=4).values, base, 10)
    assert np.all(np.abs(raw) <= 4 / math.sqrt(n))


def test_raw_bounded_by_sup_norm():
    x = D.normal(5, 0.1).sample(200, seed=0).values
    raw = estimate_raw(x, D.normal(), 10)
    assert np.all(np.abs(raw) <= np.sqrt(2 * np.arange(1, 11) + 1) + 1e-12)


def test_raw_admits_boundary_values():
    raw = estimate_raw([-1.0, 0.0, 1.0], D.exponential(1.0), 3)
    assert np.all(np.isfinite(raw))


def test_bump_bump_location(bump_data):
    f = fit(bump_data, BUMP_BASE, m_max=10)
    u = np.linspace(0, 1, 512)
    peak = u[np.argmax(f.eval_d(u))]
    assert 0.55 <= peak <= 0.70
    assert BUMP_BASE.quantile(0.63) == pytest.approx(24.85, abs=0.01)


# -- open_select -------------------------------------------------------------

def test_open_all_zero_is_empty():
    selected, smooth, scores = open_select([0, 0, 0, 0], 100)
    assert selected == () and smooth == {}
    assert scores.shape == (4,)


def test_open_hand_example():
    selected, smooth, scores = open_select([0.01, 0.30, 0.02], 1000)
    assert selected == (2,)
    assert smooth == {2: 0.30}
    assert scores[0] == pytest.approx(0.088, abs=1e-12)
    assert scores[1] == pytest.approx(0.0864, abs=1e-12)


def test_open_tie_goes_to_smaller_model():
    # second coefficient adds exactly its charge: OPEN(1) == OPEN(2)
    selected, _, scores = open_select([0.5, math.sqrt(0.02)], 100)
    assert scores[0] == pytest.approx(scores[1], abs=1e-15)
    assert selected == (1,)


def test_open_errors():
    with pytest.raises(DomainError):
        open_select([], 10)
    with pytest.raises(DomainError):
        open_select([0.1], 1)


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=12), st.integers(2, 10_000))
@settings(max_examples=300, deadline=None)
def test_open_selects_argmax_prefix(raw, n):
    selected, smooth, scores = open_select(raw, n)
    assert scores.size == len(raw)
    assert set(smooth) == set(selected)
    if selected:
        k = len(selected)
        assert scores[k - 1] == scores.max() and scores[k - 1] > 0
        assert np.all(scores[: k - 1] < scores[k - 1])
        kept = sorted(abs(raw[j - 1]) for j in selected)
        dropped = [abs(raw[j]) for j in range(len(raw)) if j + 1 not in selected]
        assert not dropped or max(dropped) <= kept[0]
    else:
        assert np.all(scores <= 0)


def test_open_scores_formula():
    raw = np.array([0.1, -0.3, 0.2])
    np.testing.assert_allclose(open_scores(raw, 50), [0.09 - 0.04, 0.13 - 0.08, 0.14 - 0.12])


def test_null_open_empty_rate():
    # Empty iff every n*c_j^2 <= 2, so the null rate is (1 - P_CLEAR)^m.
    base, m, reps = D.normal(), 6, 300
    expected = (1 - P_CLEAR) ** m
    empty = sum(not fit(base.sample(2000, seed=s).values, base, m_max=m).selected for s in range(reps))
    sd = math.sqrt(expected * (1 - expected) / reps)
    assert abs(empty / reps - expected) < 4 * sd


# -- eval_d ------------------------------------------------------------------

def test_eval_d_examples():
    base = D.normal()
    empty = fit(base.quantile([0.3, 0.7]), base, m_max=2)
    empty = type(empty)(base, 2, empty.raw_coeffs, (), {}, empty.open_scores)
    assert eval_d(empty, 0.37) == 1.0
    assert series_value({4: 0.18}, 1.0) == pytest.approx(1.54, abs=1e-12)
    assert series_value({1: 0.7}, 0.5) == 1.0


def test_eval_d_domain():
    with pytest.raises(DomainError):
        series_value({1: 0.1}, 1.01)


def test_fixed_m_mode_keeps_all_raw(bump_data):
    f = fit(bump_data, BUMP_BASE, m_max=10, select=False)
    assert f.selected == tuple(range(1, 11))
    np.testing.assert_array_equal(list(f.smooth_coeffs.values()), f.raw_coeffs)


# -- make_dsharp -------------------------------------------------------------

def test_empty_model_equals_base():
    base = D.lognormal(4, 0.24)
    model = make_dsharp(base)
    x = base.quantile(np.linspace(0.01, 0.99, 30))
    np.testing.assert_array_equal(model.pdf_positive(x), base.pdf(x))
    assert model.normalizer == 1.0


def test_gfr_sharper_peak_heavier_tails(gfr_model):
    mode = math.exp(4.0 - 0.24**2)
    assert gfr_model.pdf_positive(mode) > GFR_BASE.pdf(mode)
    for u in (0.005, 0.995):
        x = GFR_BASE.quantile(u)
        assert gfr_model.pdf_positive(x) > GFR_BASE.pdf(x)
    assert gfr_model.roots == ()
    assert gfr_model.normalizer == pytest.approx(1.0, abs=1e-14)


def test_uniform_linear_tilt():
    model = make_dsharp(D.uniform(0, 1), {1: 0.5})
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(model.pdf_positive(x), 1 + 0.5 * math.sqrt(12) * (x - 0.5), atol=1e-13)
    assert 1 - 0.5 * math.sqrt(3) > 0
    mass, _ = integrate.quad(model.pdf_positive, 0, 1)
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_clipped_model_integrates_to_one():
    model = make_dsharp(D.normal(), {1: 0.9, 3: -0.4})
    assert len(model.roots) >= 1
    assert model.normalizer > 1.0
    pts = list(D.normal().quantile(np.array(model.roots)))
    mass, _ = integrate.quad(model.pdf_positive, -12, 12, points=pts, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-6)
    # the normalizer agrees with brute-force quadrature of the clipped series
    brute, _ = integrate.quad(lambda u: max(0.0, model.d_raw(u)), 0, 1, points=list(model.roots), epsabs=1e-13)
    assert model.normalizer == pytest.approx(brute, abs=1e-10)


@given(st.dictionaries(st.integers(1, 20), st.floats(-50, 50), min_size=1, max_size=6))
@settings(max_examples=100, deadline=None)
def test_normalizer_never_below_one(coeffs):
    # the series integrates to one, so its positive part carries at least that
    assert make_dsharp(D.uniform(0, 1), coeffs).normalizer >= 1.0 - 1e-9


def test_cdf_quantile_consistency():
    model = make_dsharp(D.normal(), {1: 0.9, 3: -0.4})
    p = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(model.cdf(model.quantile(p)), p, atol=1e-10)
    h = 1e-5
    x = model.quantile(np.array([0.2, 0.5, 0.8]))
    slope = (model.cdf(x + h) - model.cdf(x - h)) / (2 * h)
    np.testing.assert_allclose(slope, model.pdf(x), rtol=1e-5)


@given(st.dictionaries(st.integers(1, 8), st.floats(-0.4, 0.4), max_size=4))
@settings(max_examples=60, deadline=None)
def test_any_model_is_a_density(coeffs):
    try:
        model = make_dsharp(D.uniform(0, 1), coeffs)
    except DegenerateModelError:
        return
    mass, _ = integrate.quad(model.pdf_positive, 0, 1, points=list(model.roots) or None, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-6)
    assert model.cdf(1.0) == pytest.approx(1.0, abs=1e-12)


@given(st.dictionaries(st.integers(1, 10), st.floats(-0.3, 0.3), min_size=1, max_size=6))
@settings(max_examples=100, deadline=None)
def test_series_mass_and_parseval(coeffs):
    nodes, weights = unit_rule(2048)
    d = series_value(coeffs, nodes)
    assert np.dot(weights, d) == pytest.approx(1.0, abs=1e-8)
    assert np.dot(weights, (d - 1) ** 2) == pytest.approx(sum(c * c for c in coeffs.values()), abs=1e-8)


# -- sampling ----------------------------------------------------------------

def test_empty_model_sampling_matches_base():
    base = D.normal(2, 3)
    np.testing.assert_array_equal(sample_dsharp(make_dsharp(base), 50, seed=9).values,
                                  base.sample(50, seed=9).values)


def test_sampler_deterministic(gfr_model):
    a = sample_dsharp(gfr_model, 100, seed=5).values
    np.testing.assert_array_equal(a, sample_dsharp(gfr_model, 100, seed=5).values)


def test_acceptance_rate(gfr_model):
    assert envelope(gfr_model) == pytest.approx(1.54, abs=1e-12)
    _, rate = accept_reject_u(gfr_model, 100_000, np.random.default_rng(2))
    assert rate == pytest.approx(1 / 1.54, abs=0.02)


def test_sampler_roundtrip(gfr_model):
    n = 100_000
    x = sample_dsharp(gfr_model, n, seed=11).values
    raw = estimate_raw(x, GFR_BASE, 8)
    assert raw[3] == pytest.approx(0.18, abs=0.02)
    planted = np.zeros(8)
    planted[3] = 0.18
    assert np.all(np.abs(raw - planted) < 3 / math.sqrt(n))


def test_sampler_matches_model_cdf():
    model = make_dsharp(D.normal(), {1: 0.9, 3: -0.4})
    x = model.sample(20_000, seed=1).values
    assert stats.kstest(x, model.cdf).pvalue > 0.001


def test_sampler_rejects_nonpositive_n(gfr_model):
    with pytest.raises(DomainError):
        sample_dsharp(gfr_model, 0)


# -- resharpen ---------------------------------------------------------------

def test_resharpen_empty_model_is_plain_fit():
    base = D.normal()
    x = D.normal(0.3, 1.2).sample(1000, seed=2).values
    a = resharpen(make_dsharp(base), x, m_max=6)
    b = fit(x, base, m_max=6).model()
    assert a.coeffs == b.coeffs and a.base is base


def test_resharpen_reduces_chisq(bump_data):
    first = fit(bump_data, BUMP_BASE, m_max=10)
    stage1 = first.model()
    second = fit(bump_data, stage1, m_max=10)
    assert chisq_index(second.raw_coeffs, second.n).value < chisq_index(first.raw_coeffs, first.n).value
    assert resharpen(stage1, bump_data, m_max=10).base is stage1


@pytest.mark.slow
def test_resharpen_null_rate(gfr_model):
    # data from the model itself: the second stage is empty at the null rate
    m, reps = 6, 100
    expected = (1 - P_CLEAR) ** m
    empty = 0
    for s in range(reps):
        x = gfr_model.sample(5000, seed=100 + s).values
        empty += not resharpen(gfr_model, x, m_max=m).coeffs
    sd = math.sqrt(expected * (1 - expected) / reps)
    assert abs(empty / reps - expected) < 4 * sd
