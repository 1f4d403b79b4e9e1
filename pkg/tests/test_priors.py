import math

import numpy as np
import pytest
from scipy import integrate

from app.core.cone import ConeElement, Partition, PhiParam, phi_to_xi, random_upper_block, xi_to_phi
from app.core.errors import DomainError, NumericalError
from app.core.montecarlo import log_wishart_density
from app.core.priors import (
    PriorKind,
    as_hyper_s,
    canonical_hyperparams,
    check_proper,
    chi_multiplier,
    enumerate_partitions,
    group_action,
    hyper_s_from_matrix,
    log_chi_multiplier,
    log_normalization,
    log_prior_density,
    posterior_update,
)
from app.core.specfun import ConeSpec


@pytest.fixture
def p11():
    return Partition(ConeSpec(1, 2), (1, 1))


# --- canonical hyperparameters ---
def test_canonical_hyperparams_real_two(p11):
    np.testing.assert_allclose(canonical_hyperparams(p11, PriorKind.JEFFREYS), [-1.5, -1.5])
    np.testing.assert_allclose(canonical_hyperparams(p11, PriorKind.REFERENCE), [-1.0, -1.5])
    np.testing.assert_allclose(canonical_hyperparams(p11, PriorKind.RIGHT_INVARIANT), [-1.0, -2.0])


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_reference_and_right_invariant_share_first_block(d, r):
    for blocks in enumerate_partitions(r):
        p = Partition(ConeSpec(d, r), blocks)
        t_c = canonical_hyperparams(p, "reference")
        t_r = canonical_hyperparams(p, "right-invariant")
        assert t_c[0] == t_r[0]


def test_prior_kind_aliases():
    assert PriorKind.parse("J") is PriorKind.JEFFREYS
    assert PriorKind.parse("c") is PriorKind.REFERENCE
    assert PriorKind.parse("right_invariant") is PriorKind.RIGHT_INVARIANT
    with pytest.raises(DomainError):
        PriorKind.parse("uniform")


def test_check_proper(p11):
    check_proper(p11, [-1.5, -2.4], mu=1.0)
    with pytest.raises(DomainError, match=r"t\^\(2\) must exceed -2.5"):
        check_proper(p11, [-1.5, -2.5], mu=1.0)


# --- hyperparameter s ---
def test_as_hyper_s_defaults_to_zero(p11):
    s = as_hyper_s(p11, None)
    assert [block.shape for block in s] == [(1, 1), (2, 2)]
    assert not any(np.any(block) for block in s)


def test_as_hyper_s_rejects_indefinite(p11):
    with pytest.raises(DomainError):
        as_hyper_s(p11, [np.eye(1), np.array([[1.0, 2.0], [2.0, 1.0]])])
    with pytest.raises(DomainError):
        as_hyper_s(p11, [np.eye(2), np.eye(2)])


def test_hyper_s_from_matrix_takes_principal_blocks(p11):
    s = hyper_s_from_matrix(p11, np.array([[2.0, 0.5], [0.5, 1.0]]))
    np.testing.assert_array_equal(s[0], [[2.0]])
    np.testing.assert_array_equal(s[1], [[2.0, 0.5], [0.5, 1.0]])


# --- density ---
def test_log_prior_density_examples(p11, make_pd):
    phi = xi_to_phi(p11, make_pd(1, 2))
    assert log_prior_density(p11, None, [0.0, 0.0], phi) == 0.0

    t_j = canonical_hyperparams(p11, PriorKind.JEFFREYS)
    assert log_prior_density(p11, None, t_j, PhiParam.identity(p11)) == 0.0

    p1 = Partition(ConeSpec(1, 1), (1,))
    assert log_prior_density(p1, [np.array([[2.0]])], [0.0], PhiParam(ConeElement([[3.0]]))) == pytest.approx(-6.0)


def test_log_prior_density_counts_off_diagonal_twice(p11):
    phi = PhiParam(ConeElement([[1.0]]), (np.array([[0.7]]),), (ConeElement([[2.0]]),))
    s = [np.zeros((1, 1)), np.ones((2, 2))]
    # ξ_{1/2} ξ_0⁻¹ ξ_{1/2}* + 2 ξ_{1/2} + ξ_0 = 0.245 + 1.4 + 2
    assert log_prior_density(p11, s, [0.0, 0.0], phi) == pytest.approx(-3.645)


# --- normalization ---
def test_log_normalization_examples(p11):
    p1 = Partition(ConeSpec(1, 1), (1,))
    assert log_normalization(p1, 1, [[2.0]], 0.0) == pytest.approx(math.log(0.5))
    assert log_normalization(p1, 1, [[1.0]], 1.0) == pytest.approx(0.0, abs=1e-14)
    assert log_normalization(p11, 2, np.eye(2), 0.0) == pytest.approx(math.log(math.pi / 2))


def test_log_normalization_one_dimensional_quadrature():
    p1 = Partition(ConeSpec(1, 1), (1,))
    for s, t in [(2.0, 0.7), (0.5, 0.25), (3.0, 4.0)]:
        value, _ = integrate.quad(lambda x: x**t * math.exp(-s * x), 0, math.inf, epsabs=0, epsrel=1e-11)
        assert math.exp(log_normalization(p1, 1, [[s]], t)) == pytest.approx(value, rel=1e-6)


@pytest.mark.parametrize("t", [0.3, -0.4, 2.0])
def test_log_normalization_two_dimensional_quadrature(p11, t):
    s11, s12, s22 = 2.0, 0.5, 1.5

    # ξ_{1/2} = u·sqrt(ξ_0) keeps the inner Gaussian at unit width.
    def integrand(u, x0):
        if x0 <= 0.0:
            return 0.0
        xh = u * math.sqrt(x0)
        exponent = t * math.log(x0) - (xh * xh / x0 * s11 + 2 * xh * s12 + x0 * s22)
        return math.sqrt(x0) * math.exp(exponent)

    value, _ = integrate.dblquad(integrand, 0, math.inf, -math.inf, math.inf, epsabs=0, epsrel=1e-10)
    s = np.array([[s11, s12], [s12, s22]])
    assert math.exp(log_normalization(p11, 2, s, t)) == pytest.approx(value, rel=1e-6)


def test_log_normalization_domain(p11):
    with pytest.raises(DomainError):
        log_normalization(p11, 2, np.eye(2), -1.5)
    with pytest.raises(DomainError):
        log_normalization(p11, 2, np.array([[1.0, 1.0], [1.0, 1.0]]), 0.0)


# --- posterior ---
def test_posterior_update_example(p11):
    t_r = canonical_hyperparams(p11, PriorKind.RIGHT_INVARIANT)
    s, t = posterior_update(p11, None, t_r, ConeElement.identity(p11.cone), 1.0)
    np.testing.assert_array_equal(s[0], [[1.0]])
    np.testing.assert_array_equal(s[1], np.eye(2))
    np.testing.assert_allclose(t, [0.0, -1.0])


def test_posterior_update_rejects_boundary(p11):
    with pytest.raises(DomainError):
        posterior_update(p11, None, [0.0, 0.0], ConeElement.identity(p11.cone), 0.0)


def test_posterior_update_scalar_quadrature():
    p1 = Partition(ConeSpec(1, 1), (1,))
    x, mu = 2.0, 3.0
    s_post, t_post = posterior_update(p1, [np.array([[1.0]])], [0.0], ConeElement([[x]]), mu)
    assert s_post[0][0, 0] == 3.0 and t_post[0] == 3.0

    def joint(xi):
        phi = PhiParam(ConeElement([[xi]]))
        return math.exp(
            log_prior_density(p1, [np.array([[1.0]])], [0.0], phi) + log_wishart_density(p1.cone, mu, [[xi]], [[x]])
        )

    marginal, _ = integrate.quad(joint, 0, math.inf, epsabs=0, epsrel=1e-11)
    # log p^μ(x|ξ) = (μ-1) log x - log Γ(μ) + μ log ξ - ξ x
    expected = log_normalization(p1, 1, s_post[0], t_post[0]) + (mu - 1) * math.log(x) - math.lgamma(mu)
    assert math.log(marginal) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("blocks", [(1,), (1, 1), (2,)])
def test_posterior_update_satisfies_bayes_rule(make_pd, d, blocks):
    r = sum(blocks)
    p = Partition(ConeSpec(d, r), blocks)
    s = as_hyper_s(p, [0.3 * np.eye(p.rank(i)) for i in range(1, p.h + 1)])
    t = np.full(p.h, 0.4)
    x = make_pd(d, r)
    mu = 2.2
    s_post, t_post = posterior_update(p, s, t, x, mu)

    gaps = []
    for _ in range(10):
        xi = make_pd(d, r)
        phi = xi_to_phi(p, xi)
        gap = (
            log_prior_density(p, s_post, t_post, phi)
            - log_prior_density(p, s, t, phi)
            - log_wishart_density(p.cone, mu, xi, x)
        )
        gaps.append(gap)
    assert max(gaps) - min(gaps) < 1e-8


# --- group action ---
def test_group_action_examples(p11, make_pd):
    xi = make_pd(1, 2)
    np.testing.assert_allclose(group_action(np.eye(2), xi).entries, xi.entries)
    out = group_action(np.diag([2.0, 1.0]), ConeElement.identity(p11.cone))
    np.testing.assert_allclose(out.entries, np.diag([4.0, 1.0]))


def test_group_action_scales_determinant(p11, rng, make_pd):
    g = random_upper_block(p11, rng)
    xi = make_pd(1, 2)
    _, logabs = np.linalg.slogdet(g)
    assert group_action(g, xi).log_det() == pytest.approx(2 * logabs + xi.log_det(), abs=1e-10)


def test_group_action_rejects_singular():
    with pytest.raises(DomainError):
        group_action(np.zeros((2, 2)), ConeElement.identity(ConeSpec(1, 2)))


def test_chi_multiplier_examples(p11, rng):
    assert chi_multiplier(p11, [0.3, -0.7], np.eye(2)) == 1.0
    t_j = canonical_hyperparams(p11, PriorKind.JEFFREYS)
    assert log_chi_multiplier(p11, t_j, random_upper_block(p11, rng)) == pytest.approx(0.0, abs=1e-12)
    t_r = canonical_hyperparams(p11, PriorKind.RIGHT_INVARIANT)
    assert chi_multiplier(p11, t_r, np.diag([3.0, 0.5])) == pytest.approx(6.0)


def test_chi_multiplier_needs_block_upper(p11):
    with pytest.raises(DomainError):
        chi_multiplier(p11, [0.0, 0.0], np.array([[1.0, 0.0], [1.0, 1.0]]))


def test_chi_multiplier_overflow_is_numerical(p11):
    g = np.diag([1e300, 1e300])
    assert log_chi_multiplier(p11, [0.0, 0.0], g) == pytest.approx(6.0 * math.log(1e300))
    with pytest.raises(NumericalError, match="overflows"):
        chi_multiplier(p11, [0.0, 0.0], g)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("blocks", [(1, 1), (1, 2), (2, 1), (1, 1, 1), (2, 2)])
def test_prior_is_relatively_invariant(rng, make_pd, d, blocks):
    r = sum(blocks)
    p = Partition(ConeSpec(d, r), blocks)
    t = rng.uniform(-2.0, 1.0, size=p.h)
    n_over_r = p.cone.n_over_r
    for _ in range(10):
        g = random_upper_block(p, rng)
        xi = make_pd(d, r)
        moved = group_action(g, xi)
        _, logabs = np.linalg.slogdet(g)
        gap = (
            log_prior_density(p, None, t, xi_to_phi(p, moved))
            + 2 * n_over_r * logabs
            - log_prior_density(p, None, t, xi_to_phi(p, xi))
            - log_chi_multiplier(p, t, g)
        )
        assert gap == pytest.approx(0.0, abs=1e-9)


def test_enumerate_partitions():
    assert list(enumerate_partitions(3)) == [(3,), (1, 2), (2, 1), (1, 1, 1)]
    assert len(list(enumerate_partitions(5))) == 16


def test_phi_round_trip_of_moved_parameter(p11, rng, make_pd):
    g = random_upper_block(p11, rng)
    moved = group_action(g, make_pd(1, 2))
    np.testing.assert_allclose(phi_to_xi(p11, xi_to_phi(p11, moved)).entries, moved.entries, atol=1e-10)
