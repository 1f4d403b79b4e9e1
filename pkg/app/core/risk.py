"""
Exact Prediction Risk
=====================

Closed-form Kullback-Leibler prediction risk of the Bayesian predictive
distribution under the prior π_t, split into per-block parts

    R(t) = Σ_i R^(i)(t^(i))

with A = t + μ + n_(i)/r_(i), B = t + μ + n_(i-1)/r_(i-1):

    R^(i) = -νk - log Γ_k(A+ν) + log Γ_k(A)
            + (A+ν) ψ_{r_(i)}(μ+ν) - A ψ_{r_(i)}(μ)
            - (B+ν) ψ_{r_(i-1)}(μ+ν) + B ψ_{r_(i-1)}(μ)      (last line absent for i = 1)

Normalized quantities: NR = (μ/ν) R and NRD = (μ²/ν)(R(t) - R(t_J)).
All block functions accept numpy arrays of t^(i).
"""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from app.core.cone import Partition, PhiParam
from app.core.errors import DomainError, NumericalError
from app.core.priors import PriorKind, as_hyper_t, canonical_hyperparams
from app.core.specfun import log_mvgamma_ratio, mvdigamma, mvpolygamma

logger = logging.getLogger(__name__)


@dataclass
class RiskReport:
    """Exact risk of one hyperparameter t at (μ, ν)."""

    t: tuple
    mu: float
    nu: float
    parts: tuple
    total: float
    nr: float
    nrd: float
    grad: tuple
    hess_diag: tuple

    def to_dict(self) -> dict:
        return asdict(self)


# --- VALIDATION ---
def _check_shapes(p: Partition, mu, nu) -> None:
    p.cone.check_shape(mu, "mu")
    p.cone.check_shape(nu, "nu")


def _check_block(p: Partition, i: int, t_i, mu: float) -> np.ndarray:
    t_i = np.asarray(t_i, dtype=float)
    floor = p.domain_floor(i, mu)
    if not np.all(t_i > floor):
        raise DomainError(f"t^({i}) must exceed -mu - ((r_(i)-k^(i))/2)d - 1 = {floor:g}")
    return t_i


def _result(values):
    values = np.asarray(values)
    return float(values) if values.ndim == 0 else values


def _digamma_step(p: Partition, i: int, mu: float, nu: float) -> float:
    """ψ_{r_(i)}(μ+ν) - ψ_{r_(i)}(μ) - ψ_{r_(i-1)}(μ+ν) + ψ_{r_(i-1)}(μ), i.e. the slope of the linear terms."""
    shift = p.rank(i - 1) * p.d / 2.0
    block = p.block_cone(i)
    return mvdigamma(block, mu + nu - shift) - mvdigamma(block, mu - shift)


# --- EXACT BLOCK RISK ---
def part_risk_exact(p: Partition, i: int, t_i, mu: float, nu: float):
    """
    Exact risk R^(i) of block i.

    Args:
        p: Partition
        i: Block index (1-based)
        t_i: Hyperparameter of the block (scalar or array)
        mu: Shape of the observed matrix, > (r-1)d/2
        nu: Shape of the future matrix, > (r-1)d/2

    Returns:
        R^(i)(t_i)
    """
    _check_shapes(p, mu, nu)
    t_i = _check_block(p, i, t_i, mu)
    k = p.k(i)
    a = t_i + mu + p.ratio(i)
    sub = p.sub_cone(i)

    value = -nu * k - log_mvgamma_ratio(p.block_cone(i), a, nu)
    value = value + (a + nu) * mvdigamma(sub, mu + nu) - a * mvdigamma(sub, mu)
    if i > 1:
        b = t_i + mu + p.ratio(i - 1)
        prev = p.sub_cone(i - 1)
        value = value - (b + nu) * mvdigamma(prev, mu + nu) + b * mvdigamma(prev, mu)
    return _result(value)


def part_risk_gradient(p: Partition, i: int, t_i, mu: float, nu: float):
    """∂R^(i)/∂t = -ψ_k(A+ν) + ψ_k(A) + ψ_k(μ+ν-(r_(i)-k)d/2) - ψ_k(μ-(r_(i)-k)d/2)."""
    _check_shapes(p, mu, nu)
    t_i = _check_block(p, i, t_i, mu)
    a = t_i + mu + p.ratio(i)
    block = p.block_cone(i)
    return _result(-mvdigamma(block, a + nu) + mvdigamma(block, a) + _digamma_step(p, i, mu, nu))


def part_risk_hessian(p: Partition, i: int, t_i, mu: float, nu: float):
    """∂²R^(i)/∂t² = -ψ'_k(A+ν) + ψ'_k(A), positive on the domain."""
    _check_shapes(p, mu, nu)
    t_i = _check_block(p, i, t_i, mu)
    a = t_i + mu + p.ratio(i)
    block = p.block_cone(i)
    return _result(-mvpolygamma(block, 1, a + nu) + mvpolygamma(block, 1, a))


def risk_difference(p: Partition, t, t_ref, mu: float, nu: float):
    """
    R(t) - R(t_ref) without forming either total.

    The log-gamma terms are differenced through log_mvgamma_ratio and the
    digamma terms collapse to a slope times (t - t_ref), which keeps NRD
    accurate when μ is large. `t` may be an array of shape (..., h).
    """
    _check_shapes(p, mu, nu)
    t = np.asarray(t, dtype=float)
    t_ref = np.asarray(t_ref, dtype=float)
    if t.shape[-1:] != (p.h,) or t_ref.shape[-1:] != (p.h,):
        raise DomainError(f"t must have {p.h} components for partition {p.label()}")

    total = np.zeros(np.broadcast_shapes(t.shape, t_ref.shape)[:-1])
    for i in range(1, p.h + 1):
        ti = _check_block(p, i, t[..., i - 1], mu)
        ri = _check_block(p, i, t_ref[..., i - 1], mu)
        block = p.block_cone(i)
        a = ti + mu + p.ratio(i)
        a_ref = ri + mu + p.ratio(i)
        gamma_part = log_mvgamma_ratio(block, a, nu) - log_mvgamma_ratio(block, a_ref, nu)
        total = total - gamma_part + (ti - ri) * _digamma_step(p, i, mu, nu)
    return _result(total)


def exact_risk(p: Partition, t, mu: float, nu: float) -> RiskReport:
    """
    Exact risk report of hyperparameter t.

    nr = (μ/ν)·total and nrd = (μ²/ν)·(total - total at t_J), the latter
    taken from risk_difference.
    """
    t = as_hyper_t(p, t)
    _check_shapes(p, mu, nu)
    parts = tuple(part_risk_exact(p, i, t[i - 1], mu, nu) for i in range(1, p.h + 1))
    total = sum(parts)
    t_j = canonical_hyperparams(p, PriorKind.JEFFREYS)
    nrd = mu**2 / nu * risk_difference(p, t, t_j, mu, nu)
    grad = tuple(part_risk_gradient(p, i, t[i - 1], mu, nu) for i in range(1, p.h + 1))
    hess = tuple(part_risk_hessian(p, i, t[i - 1], mu, nu) for i in range(1, p.h + 1))
    logger.debug("exact risk t=%s mu=%g nu=%g -> parts=%s", t.tolist(), mu, nu, parts)
    return RiskReport(
        t=tuple(t.tolist()),
        mu=float(mu),
        nu=float(nu),
        parts=parts,
        total=total,
        nr=mu / nu * total,
        nrd=float(nrd),
        grad=grad,
        hess_diag=hess,
    )


def minimize_risk(p: Partition, mu: float, nu: float) -> np.ndarray:
    """
    Minimizer of the exact risk over t, block by block.

    Each R^(i) is strictly convex, so the minimizer is the root of its
    gradient, bracketed between the domain floor and a point where the
    gradient turns positive.
    """
    _check_shapes(p, mu, nu)
    t_r = canonical_hyperparams(p, PriorKind.RIGHT_INVARIANT)
    roots = []
    for i in range(1, p.h + 1):
        floor = p.domain_floor(i, mu)

        def grad(x, i=i):
            return part_risk_gradient(p, i, x, mu, nu)

        lo = floor + 1e-12 * max(1.0, abs(floor))
        if grad(lo) >= 0:
            raise NumericalError(f"gradient of block {i} is not negative at the domain floor")
        hi = max(t_r[i - 1], lo) + 1.0
        for _ in range(200):
            if grad(hi) > 0:
                break
            hi = lo + 2.0 * (hi - lo)
        else:
            raise NumericalError(f"could not bracket the minimizer of block {i}")
        root = optimize.brentq(grad, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
        roots.append(root)
    logger.debug("minimize_risk mu=%g nu=%g -> %s", mu, nu, roots)
    return np.array(roots)


# --- EIGENVALUES / EXPANSIONS ---
def lb_eigenvalue(p: Partition, t):
    """
    Laplace-Beltrami eigenvalue of K_t:
    Σ_i [(1/4)k(t^(i) - t_R^(i))² - (d²/16)k(r - 2r_(i) + k)²].
    """
    t = np.asarray(t, dtype=float)
    if t.shape[-1:] != (p.h,):
        raise DomainError(f"t must have {p.h} components for partition {p.label()}")
    t_r = canonical_hyperparams(p, PriorKind.RIGHT_INVARIANT)
    d, r = p.d, p.cone.r
    total = np.zeros(t.shape[:-1])
    for i in range(1, p.h + 1):
        k = p.k(i)
        total = total + 0.25 * k * (t[..., i - 1] - t_r[i - 1]) ** 2
        total = total - d * d / 16.0 * k * (r - 2 * p.rank(i) + k) ** 2
    return _result(total)


def k_eigenfunction(p: Partition, t, phi: PhiParam) -> float:
    """K_t(φ) = Π_i |ξ^(i)_0|^{(1/2)(t^(i) + (r-1)d/2 + 1)}."""
    t = as_hyper_t(p, t)
    if phi.h != p.h:
        raise DomainError(f"phi has {phi.h} blocks, partition {p.label()} has {p.h}")
    log_value = sum(
        0.5 * (t[i - 1] + p.cone.n_over_r) * phi.xi0(i).log_det() for i in range(1, p.h + 1)
    )
    return math.exp(log_value)


def asympt_part_risk(p: Partition, i: int, t_i, mu: float, nu: float):
    """
    Large-μ expansion of R^(i)(t_i) through the μ^-2 terms:

        R^(i)(t_R) ≈ (ν/μ)(k/2 + (d/4)k(2r_(i)-k-1))
                   - (ν²/μ²)(k/4 + (d/8)k(2r_(i)-k-1))
                   + (ν/μ²)(k/6 + (d/4)k(2r_(i)-k-1) + (d²/24)k(3r_(i)² - 6r_(i) - 3k(r_(i)-1) + 2k² + 1))
        R^(i)(t)   ≈ R^(i)(t_R) + (ν/μ²)(1/2)k(t - t_R)²
    """
    t_i = np.asarray(t_i, dtype=float)
    k = p.k(i)
    ri = p.rank(i)
    d = p.d
    spread = k * (2 * ri - k - 1)
    t_r = canonical_hyperparams(p, PriorKind.RIGHT_INVARIANT)[i - 1]

    at_min = (
        nu / mu * (k / 2.0 + d / 4.0 * spread)
        - nu**2 / mu**2 * (k / 4.0 + d / 8.0 * spread)
        + nu / mu**2
        * (k / 6.0 + d / 4.0 * spread + d * d / 24.0 * k * (3 * ri**2 - 6 * ri - 3 * k * (ri - 1) + 2 * k**2 + 1))
    )
    return _result(at_min + nu / mu**2 * 0.5 * k * (t_i - t_r) ** 2)


def asympt_risk_difference(p: Partition, t, mu: float, nu: float):
    """Leading term 2λ(t)ν/μ² of R(t) - R(t_J)."""
    return _result(2.0 * np.asarray(lb_eigenvalue(p, t)) * nu / mu**2)


def asympt_normalized_risk(p: Partition, t, mu: float, nu: float) -> float:
    """(μ/ν) Σ_i asympt_part_risk, i.e. NR through its μ^-1 term."""
    t = as_hyper_t(p, t)
    total = sum(asympt_part_risk(p, i, t[i - 1], mu, nu) for i in range(1, p.h + 1))
    return float(mu / nu * total)


# Test independently
if __name__ == "__main__":
    from app.core.specfun import ConeSpec

    part = Partition(ConeSpec(d=1, r=2), (1, 1))
    print("=" * 50)
    for prior in PriorKind:
        report = exact_risk(part, canonical_hyperparams(part, prior), 100.0, 1.0)
        print(f"t_{prior.symbol}: total={report.total:.8f} nr={report.nr:.5f} nrd={report.nrd:.5f}")
    print(f"argmin at mu=nu=1: {minimize_risk(part, 1.0, 1.0)}")
