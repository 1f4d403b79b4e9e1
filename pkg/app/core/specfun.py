"""
Multivariate Special Functions
==============================

Multivariate gamma / polygamma functions on the symmetric cones of real
symmetric (d=1) and complex Hermitian (d=2) matrices, together with
certified Stirling-series brackets for the scalar log-gamma and digamma
functions and the large-argument expansions of their multivariate versions.

Every function accepts scalars or numpy arrays for its real argument and
returns a float for scalar input.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from app.core.errors import DomainError

logger = logging.getLogger(__name__)


# --- CONSTANTS ---
_LOG_PI = math.log(math.pi)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Arguments below this are shifted up with the exact recurrence before the
# Stirling series is used.
STIRLING_MIN = 10.0

_MAX_TERMS = 12
# Signed Bernoulli numbers B_2, B_4, ..., B_{2 * _MAX_TERMS}
_B2N = special.bernoulli(2 * _MAX_TERMS)[2::2]


# --- TYPES ---
@dataclass(frozen=True)
class ConeSpec:
    """
    Symmetric cone E_r^+ of rank r and Peirce invariant d.

    d=1 is the cone of real symmetric positive definite matrices and d=2
    the cone of complex Hermitian ones. The dimension n is derived.
    """

    d: int
    r: int
    n: int = field(init=False)

    def __post_init__(self):
        if self.d not in (1, 2):
            raise DomainError(f"d must be 1 or 2 (got {self.d})")
        if int(self.r) != self.r or self.r < 1:
            raise DomainError(f"r must be a positive integer (got {self.r})")
        object.__setattr__(self, "n", self.r + self.r * (self.r - 1) * self.d // 2)

    @property
    def boundary(self) -> float:
        """Lower end (r-1)d/2 of the shape domain."""
        return (self.r - 1) * self.d / 2.0

    @property
    def n_over_r(self) -> float:
        """n/r written as (r-1)d/2 + 1."""
        return self.boundary + 1.0

    def check_shape(self, mu, name: str = "mu") -> None:
        """Raise DomainError unless every value of `mu` exceeds (r-1)d/2."""
        values = np.asarray(mu, dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values <= self.boundary):
            bad = values if values.ndim == 0 else values[~(values > self.boundary)]
            raise DomainError(
                f"{name} must exceed (r-1)d/2 = {self.boundary:g} (got {np.min(bad):g})"
            )


@dataclass(frozen=True)
class Bracket:
    """Two-sided enclosure [lower, upper] of a real value."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise DomainError(f"bracket lower {self.lower!r} exceeds upper {self.upper!r}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def within(self, other: "Bracket") -> bool:
        """True when this bracket lies inside `other`."""
        return other.lower <= self.lower and self.upper <= other.upper


def _result(values):
    """Collapse 0-d arrays to Python floats."""
    values = np.asarray(values)
    return float(values) if values.ndim == 0 else values


def _offsets(cone: ConeSpec) -> np.ndarray:
    """Shifts (k-1)d/2 for k = 1..r of the product decomposition."""
    return np.arange(cone.r) * (cone.d / 2.0)


# --- MULTIVARIATE GAMMA / POLYGAMMA ---
def log_mvgamma(cone: ConeSpec, mu):
    """
    Multivariate log-gamma function log Γ_r(μ).

    Uses the product decomposition
    log Γ_r(μ) = (d r(r-1)/4) log π + Σ_k log Γ(μ - (k-1)d/2).

    Args:
        cone: Cone the function is attached to
        mu: Shape, every value > (r-1)d/2

    Returns:
        log Γ_r(μ) (float for scalar input)
    """
    cone.check_shape(mu)
    mu = np.asarray(mu, dtype=float)
    const = cone.d * cone.r * (cone.r - 1) / 4.0 * _LOG_PI
    terms = special.gammaln(mu[..., None] - _offsets(cone))
    return _result(const + terms.sum(axis=-1))


def mvpolygamma(cone: ConeSpec, order: int, mu):
    """
    Multivariate polygamma ψ_r^(order)(μ) = Σ_k ψ^(order)(μ - (k-1)d/2).

    Order 0 is the multivariate digamma function.
    """
    if int(order) != order or order < 0:
        raise DomainError(f"order must be a non-negative integer (got {order})")
    cone.check_shape(mu)
    mu = np.asarray(mu, dtype=float)
    args = mu[..., None] - _offsets(cone)
    if order == 0:
        terms = special.psi(args)
    else:
        terms = special.polygamma(int(order), args)
    return _result(terms.sum(axis=-1))


def mvdigamma(cone: ConeSpec, mu):
    """Multivariate digamma ψ_r(μ)."""
    return mvpolygamma(cone, 0, mu)


# --- LOG-GAMMA INCREMENTS ---
def log_gamma_ratio(z, delta):
    """
    log Γ(z + δ) - log Γ(z) without cancellation for large z.

    For z, z+δ >= STIRLING_MIN the Stirling series of both terms is
    differenced analytically; otherwise the plain difference is used.
    """
    z = np.asarray(z, dtype=float)
    delta = np.asarray(delta, dtype=float)
    z, delta = np.broadcast_arrays(z, delta)
    if np.any(z <= 0) or np.any(z + delta <= 0):
        raise DomainError("log_gamma_ratio needs z > 0 and z + delta > 0")

    out = np.empty(z.shape, dtype=float)
    large = (z >= STIRLING_MIN) & (z + delta >= STIRLING_MIN)
    small = ~large
    if np.any(small):
        out[small] = special.gammaln(z[small] + delta[small]) - special.gammaln(z[small])
    if np.any(large):
        a = z[large]
        dl = delta[large]
        b = a + dl
        rel = np.log1p(dl / a)
        # (b - 1/2) log b - (a - 1/2) log a - δ
        value = (a - 0.5) * rel + dl * np.log(b) - dl
        for n in range(1, 9):
            power = 1 - 2 * n
            coef = _B2N[n - 1] / (2 * n * (2 * n - 1))
            # b^p - a^p = a^p (exp(p log(b/a)) - 1)
            value = value + coef * a**power * np.expm1(power * rel)
        out[large] = value
    return _result(out)


def log_mvgamma_ratio(cone: ConeSpec, mu, delta):
    """log Γ_r(μ + δ) - log Γ_r(μ), accurate when δ is small relative to μ."""
    cone.check_shape(mu)
    cone.check_shape(np.asarray(mu, dtype=float) + delta, name="mu + delta")
    mu = np.asarray(mu, dtype=float)
    ratios = log_gamma_ratio(mu[..., None] - _offsets(cone), np.asarray(delta, dtype=float)[..., None])
    return _result(np.asarray(ratios).sum(axis=-1))


# --- CERTIFIED BRACKETS ---
def _check_bracket_args(z: float, terms: int) -> None:
    if not z > 0 or not math.isfinite(z):
        raise DomainError(f"z must be positive (got {z})")
    if int(terms) != terms or terms < 1 or terms >= _MAX_TERMS:
        raise DomainError(f"terms must be an integer in [1, {_MAX_TERMS - 1}] (got {terms})")


def _shift(z: float) -> int:
    return max(0, math.ceil(STIRLING_MIN - z))


def _bracket(parts: list, series: list, terms: int) -> Bracket:
    """
    Bracket between the partial sums with `terms` and `terms + 1` series terms.

    `parts` are the non-series summands. Partial sums are rounded once with
    fsum over the same prefix, so the shared endpoint of consecutive brackets
    is the same float, and both ends are padded by an allowance that depends
    on the summand magnitudes only.
    """
    low_n = math.fsum(parts + series[:terms])
    high_n = math.fsum(parts + series[: terms + 1])
    pad = 16.0 * np.finfo(float).eps * (math.fsum(abs(v) for v in parts) + 1.0)
    return Bracket(min(low_n, high_n) - pad, max(low_n, high_n) + pad)


def log_gamma_bracket(z: float, terms: int) -> Bracket:
    """
    Certified bracket of log Γ(z) from the Stirling series.

    The remainder after N terms has the sign of the first omitted term and
    is smaller in magnitude, so log Γ(z) lies between the partial sums with
    N = terms and N = terms + 1. Arguments below STIRLING_MIN are first
    shifted with log Γ(z) = log Γ(z + m) - Σ log(z + j).
    """
    _check_bracket_args(z, terms)
    m = _shift(z)
    zs = z + m
    parts = [(zs - 0.5) * math.log(zs), -zs, _HALF_LOG_2PI] + [-math.log(z + j) for j in range(m)]
    series = [_B2N[n - 1] / (2 * n * (2 * n - 1) * zs ** (2 * n - 1)) for n in range(1, terms + 2)]
    return _bracket(parts, series, terms)


def digamma_bracket(z: float, terms: int) -> Bracket:
    """
    Certified bracket of ψ(z) from the asymptotic series
    ψ(z) = log z - 1/(2z) - Σ B_2n / (2n z^2n), with the shift
    ψ(z) = ψ(z + m) - Σ 1/(z + j) for small arguments.
    """
    _check_bracket_args(z, terms)
    m = _shift(z)
    zs = z + m
    parts = [math.log(zs), -0.5 / zs] + [-1.0 / (z + j) for j in range(m)]
    series = [-_B2N[n - 1] / (2 * n * zs ** (2 * n)) for n in range(1, terms + 2)]
    return _bracket(parts, series, terms)


# --- LARGE-SHAPE EXPANSIONS ---
def asympt_log_mvgamma(cone: ConeSpec, mu, x):
    """
    Expansion of log Γ_r(μ + x) as μ → ∞ through the μ^-2 term.

    The caller is responsible for μ being large relative to |x| and (r-1)d/2.
    """
    d, r = float(cone.d), float(cone.r)
    mu = np.asarray(mu, dtype=float)
    x = np.asarray(x, dtype=float)
    q = d * d - 6.0 * d + 4.0

    lead = r * mu * np.log(mu) - r * mu
    log_coef = -0.25 * d * r**2 + 0.25 * (d - 2.0) * r + r * x
    const = 0.25 * d * _LOG_PI * r**2 + 0.25 * (-_LOG_PI * d + 2.0 * math.log(2.0 * math.pi)) * r
    inv1 = (
        d**2 * r**3 / 24.0
        - (d - 2.0) * d * r**2 / 16.0
        + q * r / 48.0
        + (-0.25 * d * r**2 + 0.25 * (d - 2.0) * r) * x
        + 0.5 * r * x**2
    )
    inv2 = (
        d**3 * r**4 / 192.0
        - (d - 2.0) * d**2 * r**3 / 96.0
        + q * d * r**2 / 192.0
        + (d - 2.0) * d * r / 96.0
        + (-(d**2) * r**3 / 24.0 + (d - 2.0) * d * r**2 / 16.0 - q * r / 48.0) * x
        + (d * r**2 / 8.0 - (d - 2.0) * r / 8.0) * x**2
        - r * x**3 / 6.0
    )
    return _result(lead + log_coef * np.log(mu) + const + inv1 / mu + inv2 / mu**2)


def asympt_mvdigamma(cone: ConeSpec, mu, x):
    """Expansion of ψ_r(μ + x) as μ → ∞ through the μ^-2 term."""
    d, r = float(cone.d), float(cone.r)
    mu = np.asarray(mu, dtype=float)
    x = np.asarray(x, dtype=float)
    q = d * d - 6.0 * d + 4.0

    inv1 = -0.25 * d * r**2 + 0.25 * (d - 2.0) * r + r * x
    inv2 = (
        -(d**2) * r**3 / 24.0
        + (d - 2.0) * d * r**2 / 16.0
        - q * r / 48.0
        + (0.25 * d * r**2 - 0.25 * (d - 2.0) * r) * x
        - 0.5 * r * x**2
    )
    return _result(r * np.log(mu) + inv1 / mu + inv2 / mu**2)


# Smoke test
if __name__ == "__main__":
    real2 = ConeSpec(d=1, r=2)
    print(f"log Γ_2(3/2) = {log_mvgamma(real2, 1.5):.6f}  (log(π/2) = {math.log(math.pi / 2):.6f})")
    print(f"ψ_2(3/2)     = {mvdigamma(real2, 1.5):.6f}")
    for n_terms in (1, 2, 3):
        b = log_gamma_bracket(0.6, n_terms)
        print(f"log Γ(0.6) in [{b.lower:.15f}, {b.upper:.15f}] (N={n_terms})")
