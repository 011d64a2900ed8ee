import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from dsharp import distributions as D
from dsharp.cli import x_grid
from dsharp.errors import ConvergenceError, DomainError, InputError, ParameterError, SingularDesignError
from dsharp.q2d import (
    QPData,
    design_matrix,
    init_exponential,
    init_location_scale,
    init_model,
    lambda_grid,
    lambda_max,
    lasso_cd,
    lasso_path,
    q2d,
    solve_lasso,
    solve_ols,
)
from dsharp.lp_basis import build_basis
from dsharp.sharpening import make_dsharp

BIMODAL = QPData.from_pairs([(-3.40, .04), (-2.53, .15), (-1.20, .39), (0.0, .50),
                             (2.0, .75), (2.83, .90), (3.60, .97)])
NAVY = QPData.from_pairs([(0.12, .01), (1.30, .20), (3.00, .50), (7.00, .80), (26.17, .99)])


def local_maxima(y):
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])
    return np.flatnonzero(inner) + 1


# -- QPData -------------------------------------------------------------------

def test_qpdata_validation():
    with pytest.raises(InputError, match="row 2"):
        QPData([1, 2, 2], [0.1, 0.2, 0.3])
    with pytest.raises(InputError, match="row 1"):
        QPData([1, 2, 3], [0.3, 0.2, 0.4])
    with pytest.raises(InputError):
        QPData([1], [0.5])
    with pytest.raises(InputError, match="row 0"):
        QPData([1, 2], [0.0, 0.5])


def test_read_csv(tmp_path):
    path = tmp_path / "qp.csv"
    path.write_text("x,p\n0.12,0.01\n1.30,0.20\n\n3.00,0.50\n")
    qp = QPData.read_csv(path)
    np.testing.assert_array_equal(qp.x, [0.12, 1.30, 3.00])
    path.write_text("q,prob\n1,0.5\n")
    with pytest.raises(InputError, match="line 1"):
        QPData.read_csv(path)
    path.write_text("x,p\n1,0.2\nfoo,0.5\n")
    with pytest.raises(InputError, match="line 3"):
        QPData.read_csv(path)
    path.write_text("x,p\n1,0.2\n3,0.5\n2,0.7\n")
    with pytest.raises(InputError, match="row 2"):
        QPData.read_csv(path)


# -- initialisers -------------------------------------------------------------

def test_bimodal_normal_init():
    base = init_location_scale(BIMODAL, "normal")
    assert abs(base.params["mean"]) < 0.25
    assert 2.0 <= base.params["sd"] <= 2.6


def test_exact_normal_init():
    p = np.array([.1, .3, .5, .7, .9])
    qp = QPData(D.normal(5, 2).quantile(p), p)
    base = init_location_scale(qp, "normal")
    assert base.params["mean"] == pytest.approx(5.0, abs=1e-10)
    assert base.params["sd"] == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("family", ["normal", "laplace", "logistic"])
def test_symmetric_pairs_pass_the_median(family):
    qp = QPData([-3.0, -1.0, 0.7, 2.4, 4.4], [0.1, 0.3, 0.5, 0.7, 0.9])
    base = init_location_scale(qp, family)
    loc = base.params.get("mean", base.params.get("loc"))
    assert loc == pytest.approx(0.7, abs=1e-12)


def test_location_scale_errors():
    with pytest.raises(ParameterError):
        init_location_scale(NAVY, "lognormal")


def test_exponential_init():
    assert init_exponential(NAVY).params["mean"] == pytest.approx(4.328, abs=5e-4)
    assert round(3 / math.log(2), 2) == 4.33
    one = QPData([0.1, math.log(2), 2.0], [0.2, 0.5, 0.8])
    assert init_exponential(one).params["mean"] == pytest.approx(1.0, abs=1e-14)
    interp = QPData([1.0, 2.0], [0.4, 0.6])
    assert init_exponential(interp).params["mean"] == pytest.approx(1.5 / math.log(2))
    with pytest.raises(DomainError):
        init_exponential(QPData([1.0, 2.0], [0.6, 0.8]))


# -- design ---------------------------------------------------------------------

def test_design_matrix_examples():
    base = D.uniform(0, 4)
    qp = QPData([1.0, 2.0, 4.0 - 1e-12], [0.25, 0.5, 1 - 2.5e-13])
    v, S0 = design_matrix(qp, base, 3)
    np.testing.assert_allclose(v, 0.0, atol=1e-12)
    assert S0.shape == (3, 3)
    assert S0[1, 0] == pytest.approx(-math.sqrt(12) / 8, abs=1e-14)
    np.testing.assert_allclose(S0[2], 0.0, atol=1e-9)
    # a pair beyond the support maps to F0 = 1 and an exactly zero row
    _, S0 = design_matrix(QPData([1.0, 5.0], [0.25, 0.9]), base, 3)
    np.testing.assert_allclose(S0[1], 0.0, atol=1e-15)


def test_design_entries_match_quadrature():
    base = D.normal(0, 2)
    v, S0 = design_matrix(BIMODAL, base, 4)
    b = build_basis(4)
    for i, u in enumerate(base.cdf(BIMODAL.x)):
        for j in range(1, 5):
            quad, _ = integrate.quad(lambda t: b.eval_T(j, t), 0, u, epsabs=1e-13)
            assert S0[i, j - 1] == pytest.approx(quad, abs=1e-10)
    np.testing.assert_allclose(v, BIMODAL.p - base.cdf(BIMODAL.x))


# -- OLS ------------------------------------------------------------------------

def planted_qp(model, p):
    return QPData(model.quantile(np.asarray(p)), np.asarray(p))


def test_ols_zero_gap():
    _, S0 = design_matrix(BIMODAL, D.normal(0, 2), 3)
    np.testing.assert_array_equal(solve_ols(np.zeros(7), S0), 0.0)


def test_ols_square_system_interpolates():
    base = D.normal(0, 2)
    v, S0 = design_matrix(BIMODAL, base, 7)
    beta = solve_ols(v, S0)
    assert np.linalg.norm(v - S0 @ beta) < 1e-9


def test_ols_planted_second_order():
    base = D.normal(1, 1.5)
    truth = make_dsharp(base, {2: 0.25})
    qp = planted_qp(truth, [.05, .2, .35, .5, .65, .8, .95])
    fitted = q2d(qp, base=base, m=2, method="ols")
    np.testing.assert_allclose(fitted.beta, [0.0, 0.25], atol=1e-6)


def test_ols_interpolation_at_l_equals_m():
    base = D.logistic(0, 1)
    qp = QPData([-2.0, -0.5, 0.3, 1.0, 2.5], [0.08, 0.35, 0.6, 0.75, 0.93])
    fitted = q2d(qp, base=base, m=5, method="ols")
    assert np.max(np.abs(fitted.model.cdf_raw(qp.x) - qp.p)) < 1e-6


@given(st.dictionaries(st.integers(1, 4), st.floats(-0.12, 0.12), min_size=1, max_size=4))
@settings(max_examples=30, deadline=None)
def test_ols_roundtrip(coeffs):
    base = D.normal(0, 1)
    truth = make_dsharp(base, coeffs)
    qp = planted_qp(truth, np.linspace(0.05, 0.95, 9))
    fitted = q2d(qp, base=base, m=4, method="ols")
    expected = [coeffs.get(j, 0.0) for j in range(1, 5)]
    np.testing.assert_allclose(fitted.beta, expected, atol=1e-4)


def test_ols_singular():
    v, S0 = design_matrix(NAVY, init_exponential(NAVY), 6)
    with pytest.raises(SingularDesignError):
        solve_ols(v, S0)
    with pytest.raises(SingularDesignError):
        solve_ols(np.zeros(3), np.ones((3, 2)))


def test_qp_from_base_gives_zero():
    base = D.normal(0.5, 1.3)
    p = np.linspace(0.1, 0.9, 7)
    qp = QPData(base.quantile(p), p)
    fitted = q2d(qp, base=base, m=4, method="ols")
    assert np.max(np.abs(fitted.beta)) < 1e-6
    lasso = q2d(qp, base=base, m=6)
    assert np.max(np.abs(lasso.beta)) < 1e-6


# -- lasso ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def navy_system():
    return design_matrix(NAVY, init_exponential(NAVY), 6)


def test_lasso_full_shrinkage(navy_system):
    v, S0 = navy_system
    top = lambda_max(v, S0)
    np.testing.assert_array_equal(lasso_cd(v, S0, top), 0.0)
    np.testing.assert_array_equal(lasso_cd(v, S0, 10 * top), 0.0)
    assert np.any(lasso_cd(v, S0, 0.9 * top) != 0.0)


def test_lasso_zero_penalty_matches_ols():
    v, S0 = design_matrix(BIMODAL, D.normal(0, 2), 4)
    np.testing.assert_allclose(lasso_cd(v, S0, 0.0), solve_ols(v, S0), atol=1e-8)


def test_lasso_kkt_conditions(navy_system):
    v, S0 = navy_system
    for lam in lambda_grid(v, S0)[::7]:
        beta = lasso_cd(v, S0, lam)
        grad = 2 * S0.T @ (v - S0 @ beta)
        active = beta != 0
        np.testing.assert_allclose(grad[active], lam * np.sign(beta[active]), atol=1e-7)
        assert np.all(np.abs(grad[~active]) <= lam + 1e-7)


@pytest.mark.parametrize("qp,family", [(NAVY, "exp"), (BIMODAL, "normal")])
def test_lasso_path_support_monotone(qp, family):
    v, S0 = design_matrix(qp, init_model(qp, family), 6)
    grid = lambda_grid(v, S0)
    nonzero = (lasso_path(v, S0, grid) != 0).sum(axis=1)
    # grid runs from large to small penalty: support size must not shrink
    assert np.all(np.diff(nonzero) >= 0)


def test_lasso_convergence_error(navy_system):
    v, S0 = navy_system
    with pytest.raises(ConvergenceError):
        lasso_cd(v, S0, 1e-6, max_sweeps=1)


def test_lasso_lambda_options(navy_system):
    v, S0 = navy_system
    beta, lam = solve_lasso(v, S0, 0.01)
    assert lam == 0.01
    for mode in ("auto", "loo"):
        beta, lam = solve_lasso(v, S0, mode)
        assert lam in lambda_grid(v, S0)
    with pytest.raises(InputError):
        solve_lasso(v, S0, "cv")
    with pytest.raises(DomainError):
        solve_lasso(v, S0, -1.0)


def test_underdetermined_lasso():
    qp = QPData([-1.0, 0.0, 1.0], [0.2, 0.5, 0.85])
    fitted = q2d(qp, "normal", m=8)
    assert fitted.method == "lasso" and fitted.beta.size == 8


# -- examples -----------------------------------------------------------------------

def test_navy_reproduces_cdf():
    fitted = q2d(NAVY, "exp", m=6)
    assert fitted.method == "lasso"
    assert fitted.base.params["mean"] == pytest.approx(4.33, abs=0.01)
    assert np.max(np.abs(fitted.model.cdf(NAVY.x) - NAVY.p)) <= 0.02
    # the repair changes both the peak and the tail of the exponential
    base = fitted.base
    assert fitted.model.pdf(0.0) != pytest.approx(base.pdf(0.0), rel=0.05)
    assert fitted.model.cdf(20.0) != pytest.approx(base.cdf(20.0), abs=0.005)


def test_bimodal_has_two_peaks():
    fitted = q2d(BIMODAL, "normal", m=6)
    x = x_grid(fitted.base, fitted.model)
    assert x.size == 512
    peaks = x[local_maxima(np.asarray(fitted.model.pdf(x)))]
    assert len(peaks) == 2
    assert abs(peaks[0] + 2) <= 0.5 and abs(peaks[1] - 2) <= 0.5


def test_as_dict_fields():
    out = q2d(NAVY, "exp").as_dict()
    assert set(out) == {"base", "beta", "method", "lambda", "residual", "normalizer"}
    assert out["residual"] >= 0 and len(out["beta"]) == 6
