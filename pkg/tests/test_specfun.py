import math

import numpy as np
import pytest
from scipy import special

from app.core.errors import DomainError
from app.core.specfun import (
    Bracket,
    ConeSpec,
    asympt_log_mvgamma,
    asympt_mvdigamma,
    digamma_bracket,
    log_gamma_bracket,
    log_gamma_ratio,
    log_mvgamma,
    log_mvgamma_ratio,
    mvdigamma,
    mvpolygamma,
)

EULER = 0.5772156649015329
CONES = [ConeSpec(1, 1), ConeSpec(1, 2), ConeSpec(1, 3), ConeSpec(2, 2), ConeSpec(2, 3)]


# --- ConeSpec ---
@pytest.mark.parametrize("d,r,n", [(1, 1, 1), (1, 2, 3), (1, 3, 6), (2, 2, 4), (2, 3, 9)])
def test_cone_dimension(d, r, n):
    cone = ConeSpec(d, r)
    assert cone.n == n
    assert cone.n_over_r == pytest.approx(n / r)


@pytest.mark.parametrize("d,r", [(3, 2), (0, 1), (1, 0), (1, 1.5)])
def test_cone_rejects_bad_invariants(d, r):
    with pytest.raises(DomainError):
        ConeSpec(d, r)


def test_check_shape_names_the_boundary():
    with pytest.raises(DomainError, match=r"mu must exceed \(r-1\)d/2 = 0.5 \(got 0.4\)"):
        ConeSpec(1, 2).check_shape(0.4)


def test_bracket_rejects_inverted_bounds():
    with pytest.raises(DomainError):
        Bracket(1.0, 0.0)


# --- multivariate gamma ---
@pytest.mark.parametrize(
    "d,r,mu,expected",
    [(1, 1, 1.0, 0.0), (1, 2, 1.5, math.log(math.pi / 2)), (2, 2, 2.0, math.log(math.pi))],
)
def test_log_mvgamma_examples(d, r, mu, expected):
    assert log_mvgamma(ConeSpec(d, r), mu) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_log_mvgamma_product_decomposition(r):
    mus = np.linspace((r - 1) / 2 + 0.05, 30.0, 25)
    value = log_mvgamma(ConeSpec(1, r), mus)
    direct = sum(special.gammaln(mus - k / 2) for k in range(r)) + r * (r - 1) / 4 * math.log(math.pi)
    np.testing.assert_allclose(value - direct, 0.0, atol=1e-12)


def test_log_mvgamma_rejects_boundary():
    with pytest.raises(DomainError):
        log_mvgamma(ConeSpec(2, 2), 1.0)


@pytest.mark.parametrize(
    "d,r,order,mu,expected",
    [
        (1, 1, 0, 1.0, -EULER),
        (1, 2, 0, 1.5, 2 - EULER - 2 * math.log(2) - EULER),
        (1, 1, 1, 1.0, math.pi**2 / 6),
    ],
)
def test_mvpolygamma_examples(d, r, order, mu, expected):
    assert mvpolygamma(ConeSpec(d, r), order, mu) == pytest.approx(expected, abs=1e-12)


def test_mvpolygamma_rejects_negative_order():
    with pytest.raises(DomainError):
        mvpolygamma(ConeSpec(1, 1), -1, 2.0)


def test_small_arguments_are_allowed():
    assert mvdigamma(ConeSpec(1, 1), 1e-3) == pytest.approx(special.psi(1e-3))
    assert mvdigamma(ConeSpec(1, 1), 1e-3) < -999


@pytest.mark.parametrize("cone", CONES, ids=lambda c: f"d{c.d}r{c.r}")
def test_derivatives_match_finite_differences(cone):
    h = 1e-5
    for mu in cone.boundary + np.array([0.3, 1.0, 4.0, 15.0]):
        fd0 = (log_mvgamma(cone, mu + h) - log_mvgamma(cone, mu - h)) / (2 * h)
        psi = mvdigamma(cone, mu)
        assert abs(fd0 - psi) <= 1e-5 * max(1.0, abs(psi))

        fd1 = (mvdigamma(cone, mu + h) - mvdigamma(cone, mu - h)) / (2 * h)
        tri = mvpolygamma(cone, 1, mu)
        assert abs(fd1 - tri) <= 1e-5 * max(1.0, abs(tri))


@pytest.mark.parametrize("cone", CONES, ids=lambda c: f"d{c.d}r{c.r}")
@pytest.mark.parametrize("order", [1, 2])
def test_polygamma_sign_and_monotonicity(cone, order):
    mus = cone.boundary + np.linspace(0.05, 40.0, 60)
    signed = (-1) ** (order + 1) * mvpolygamma(cone, order, mus)
    assert np.all(signed > 0)
    assert np.all(np.diff(signed) < 0)


def test_vectorized_input_returns_array():
    mus = np.array([1.0, 2.0, 3.0])
    out = mvdigamma(ConeSpec(1, 2), mus)
    assert out.shape == (3,)
    assert isinstance(mvdigamma(ConeSpec(1, 2), 2.0), float)


# --- log-gamma increments ---
@pytest.mark.parametrize("z", [0.3, 2.0, 9.99, 10.0, 55.0, 1e4, 1e7])
@pytest.mark.parametrize("delta", [-0.2, 0.5, 1.0, 3.7])
def test_log_gamma_ratio_matches_gammaln(z, delta):
    expected = special.gammaln(z + delta) - special.gammaln(z)
    tol = 1e-12 * max(1.0, abs(special.gammaln(z)))
    assert log_gamma_ratio(z, delta) == pytest.approx(expected, abs=tol)


def test_log_gamma_ratio_unit_step_is_log():
    z = np.array([12.5, 1e3, 1e6, 1e9])
    np.testing.assert_allclose(log_gamma_ratio(z, 1.0), np.log(z), rtol=1e-14)


def test_log_mvgamma_ratio_matches_difference():
    cone = ConeSpec(2, 3)
    for mu in (2.5, 8.0, 40.0):
        expected = log_mvgamma(cone, mu + 1.3) - log_mvgamma(cone, mu)
        assert log_mvgamma_ratio(cone, mu, 1.3) == pytest.approx(expected, rel=1e-12)


def test_log_gamma_ratio_rejects_nonpositive():
    with pytest.raises(DomainError):
        log_gamma_ratio(1.0, -1.5)


# --- certified brackets ---
BRACKET_Z = [0.6, 1.0, 2.0, 5.0, 10.0, 50.0]


@pytest.mark.parametrize("z", BRACKET_Z)
@pytest.mark.parametrize("terms", [1, 2, 3])
def test_brackets_contain_production_values(z, terms):
    assert log_gamma_bracket(z, terms).contains(special.gammaln(z))
    assert digamma_bracket(z, terms).contains(special.psi(z))


@pytest.mark.parametrize("z", BRACKET_Z)
@pytest.mark.parametrize("bracket", [log_gamma_bracket, digamma_bracket])
def test_bracket_widths_shrink(z, bracket):
    widths = [bracket(z, n).width for n in (1, 2, 3)]
    assert widths[1] <= widths[0]
    assert widths[2] <= widths[1]
    assert widths[2] < widths[0]


@pytest.mark.parametrize("z", np.linspace(0.6, 50.0, 23))
@pytest.mark.parametrize("bracket", [log_gamma_bracket, digamma_bracket])
def test_brackets_nest(z, bracket):
    for n in range(1, 6):
        assert bracket(z, n + 1).within(bracket(z, n))


def test_bracket_examples():
    b = log_gamma_bracket(2.0, 1)
    assert b.contains(0.0) and b.width < 1e-3
    assert log_gamma_bracket(1.0, 2).contains(0.0)
    assert log_gamma_bracket(10.0, 3).contains(math.log(362880.0))
    assert digamma_bracket(1.0, 2).contains(-EULER)
    assert digamma_bracket(2.0, 1).contains(1 - EULER)


def test_digamma_bracket_width_at_fifty():
    # The first omitted term at z = 50 is 1/(120 z^4), about 1.3e-9.
    assert digamma_bracket(50.0, 1).width < 2e-9
    assert digamma_bracket(50.0, 2).width < 1e-10


@pytest.mark.parametrize("z,terms", [(0.0, 1), (-1.0, 2), (1.0, 0), (1.0, 12), (math.inf, 1)])
def test_bracket_domain(z, terms):
    with pytest.raises(DomainError):
        log_gamma_bracket(z, terms)


# --- large-shape expansions ---
def test_asympt_log_mvgamma_examples():
    assert asympt_log_mvgamma(ConeSpec(1, 1), 100.0, 0.0) == pytest.approx(
        log_mvgamma(ConeSpec(1, 1), 100.0), abs=1e-6
    )
    assert asympt_log_mvgamma(ConeSpec(2, 2), 100.0, 0.0) == pytest.approx(
        log_mvgamma(ConeSpec(2, 2), 100.0), abs=1e-5
    )


def test_asympt_mvdigamma_examples():
    assert asympt_mvdigamma(ConeSpec(1, 1), 100.0, 0.0) == pytest.approx(mvdigamma(ConeSpec(1, 1), 100.0), abs=1e-6)
    assert asympt_mvdigamma(ConeSpec(1, 2), 100.0, 0.5) == pytest.approx(mvdigamma(ConeSpec(1, 2), 100.5), abs=1e-4)
    assert asympt_mvdigamma(ConeSpec(2, 3), 500.0, 0.0) == pytest.approx(mvdigamma(ConeSpec(2, 3), 500.0), abs=1e-6)


def _error_ratios(exact, approx, cone, x):
    errors = [abs(exact(cone, mu + x) - approx(cone, mu, x)) for mu in (50.0, 100.0, 200.0)]
    return errors[0] / errors[1], errors[1] / errors[2]


@pytest.mark.parametrize("d,r,x", [(1, 1, 0.0), (1, 2, 1.0), (2, 2, 0.0)])
def test_asympt_log_mvgamma_error_is_cubic(d, r, x):
    for ratio in _error_ratios(log_mvgamma, asympt_log_mvgamma, ConeSpec(d, r), x):
        assert 6.0 <= ratio <= 10.0


@pytest.mark.parametrize("d,r,x", [(1, 2, 0.0), (2, 2, 0.0), (1, 3, 0.25)])
def test_asympt_mvdigamma_error_is_cubic(d, r, x):
    for ratio in _error_ratios(mvdigamma, asympt_mvdigamma, ConeSpec(d, r), x):
        assert 6.0 <= ratio <= 10.0
