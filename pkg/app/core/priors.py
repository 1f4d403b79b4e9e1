"""
Conjugate Prior Family
======================

The enriched standard conjugate prior on the reduced parameter φ,

    π_{s,t}(φ) ∝ Π_i |ξ^(i)_0|^{t^(i)} exp(-⟨ζ_(i) - (ζ_(i-1) ⊕ 0) | s^(i)⟩),

its canonical hyperparameters (Jeffreys, reference, right-invariant), the
block normalization constants, the posterior update and the action of the
block-upper-triangular group with its multiplier χ_t.

Hyperparameters:
    t  numpy vector of h reals (HyperT)
    s  tuple of h positive semi-definite matrices, s^(i) of rank r_(i) (HyperS)
"""

import itertools
import logging
import math
from enum import Enum
from typing import Iterator, Optional, Sequence

import numpy as np

from app.core.cone import (
    ConeElement,
    Partition,
    PhiParam,
    as_element,
    block_diagonals,
    check_block_upper,
    inner,
)
from app.core.errors import DomainError, NotPositiveDefiniteError, NumericalError
from app.core.specfun import log_mvgamma

logger = logging.getLogger(__name__)

PSD_TOL = 1e-10
_LOG_PI = math.log(math.pi)


class PriorKind(str, Enum):
    JEFFREYS = "jeffreys"
    REFERENCE = "reference"
    RIGHT_INVARIANT = "right-invariant"

    @classmethod
    def parse(cls, name: str) -> "PriorKind":
        key = name.strip().lower().replace("_", "-")
        aliases = {"j": cls.JEFFREYS, "c": cls.REFERENCE, "r": cls.RIGHT_INVARIANT, "ri": cls.RIGHT_INVARIANT}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(kind.value for kind in cls)
            raise DomainError(f"unknown prior kind {name!r} (choose from {choices})")

    @property
    def symbol(self) -> str:
        return {"jeffreys": "J", "reference": "C", "right-invariant": "R"}[self.value]


# --- HYPERPARAMETERS ---
def as_hyper_t(p: Partition, t) -> np.ndarray:
    """Validate a t vector against the partition and return it as a float array."""
    values = np.asarray(t, dtype=float)
    if values.shape != (p.h,):
        raise DomainError(f"t must have {p.h} components for partition {p.label()} (got {values.size})")
    if not np.all(np.isfinite(values)):
        raise DomainError("t components must be finite")
    return values


def check_proper(p: Partition, t, mu: float = 0.0) -> None:
    """Raise DomainError unless t^(i) > -μ - ((r_(i)-k^(i))/2)d - 1 for every block."""
    t = as_hyper_t(p, t)
    for i in range(1, p.h + 1):
        floor = p.domain_floor(i, mu)
        if not t[i - 1] > floor:
            raise DomainError(f"t^({i}) must exceed {floor:g} (got {t[i - 1]:g})")


def zero_hyper_s(p: Partition) -> tuple:
    return tuple(np.zeros((p.rank(i), p.rank(i)), dtype=complex if p.d == 2 else float) for i in range(1, p.h + 1))


def as_hyper_s(p: Partition, s: Optional[Sequence]) -> tuple:
    """
    Validate per-block s hyperparameters.

    None means s = 0. Each s^(i) must be a Hermitian r_(i)×r_(i) matrix with
    eigenvalues >= -1e-10.
    """
    if s is None:
        return zero_hyper_s(p)
    if len(s) != p.h:
        raise DomainError(f"s must have {p.h} blocks (got {len(s)})")
    blocks = []
    for i, block in enumerate(s, start=1):
        entries = block.entries if isinstance(block, ConeElement) else np.asarray(block)
        if entries.shape != (p.rank(i), p.rank(i)):
            raise DomainError(f"s^({i}) must be {p.rank(i)}x{p.rank(i)} (got shape {entries.shape})")
        element = ConeElement(entries, p.d)
        lowest = float(np.linalg.eigvalsh(element.entries).min())
        if lowest < -PSD_TOL:
            raise DomainError(f"s^({i}) is not positive semi-definite (eigenvalue {lowest:.3g})")
        blocks.append(np.array(element.entries))
    return tuple(blocks)


def hyper_s_from_matrix(p: Partition, s_full) -> tuple:
    """Per-block s taken as the principal r_(i) blocks of one r×r matrix."""
    entries = s_full.entries if isinstance(s_full, ConeElement) else np.asarray(s_full)
    return as_hyper_s(p, [entries[: p.rank(i), : p.rank(i)] for i in range(1, p.h + 1)])


def canonical_hyperparams(p: Partition, kind) -> np.ndarray:
    """
    Canonical hyperparameter t for the named prior.

        Jeffreys         t^(i) = -((r-1)d/2 + 1)
        reference        t^(i) = -((r_(i)-1)d/2 + 1)
        right-invariant  t^(i) = -((2r_(i)-k^(i)-1)d/2 + 1)
    """
    kind = PriorKind.parse(kind) if isinstance(kind, str) else kind
    d = p.d
    r = p.cone.r
    values = []
    for i in range(1, p.h + 1):
        if kind is PriorKind.JEFFREYS:
            values.append(-((r - 1) * d / 2.0 + 1.0))
        elif kind is PriorKind.REFERENCE:
            values.append(-((p.rank(i) - 1) * d / 2.0 + 1.0))
        else:
            values.append(-((2 * p.rank(i) - p.k(i) - 1) * d / 2.0 + 1.0))
    return np.array(values)


# --- DENSITY / NORMALIZATION ---
def log_prior_density(p: Partition, s, t, phi: PhiParam) -> float:
    """
    Unnormalized log prior Σ_i [t^(i) log|ξ^(i)_0| - ⟨ζ_(i) - (ζ_(i-1) ⊕ 0) | s^(i)⟩].

    The inner product is taken over full r_(i)×r_(i) matrices, so the
    off-diagonal block ξ^(i)_{1/2} enters twice.
    """
    t = as_hyper_t(p, t)
    s = as_hyper_s(p, s)
    if phi.h != p.h:
        raise DomainError(f"phi has {phi.h} blocks, partition {p.label()} has {p.h}")
    total = 0.0
    for i in range(1, p.h + 1):
        total += t[i - 1] * phi.xi0(i).log_det()
        if np.any(s[i - 1]):
            total -= inner(phi.conditional_block(i), s[i - 1])
    return total


def log_normalization(p: Partition, i: int, s_i, t_i: float) -> float:
    """
    Log normalization constant of block i of the prior.

        (r_(i-1)k^(i)d/2) log π + log Γ_{k^(i)}(t + n_(i)/r_(i))
            + (t + n_(i-1)/r_(i-1)) log|s^(i)_1| - (t + n_(i)/r_(i)) log|s^(i)|

    For i = 1 only the gamma and |s^(1)| terms remain.

    Args:
        p: Partition
        i: Block index (1-based)
        s_i: Positive definite matrix of rank r_(i)
        t_i: Hyperparameter, t_i > -((r_(i)-k^(i))/2)d - 1

    Returns:
        log ∫ |ξ_0|^t exp(-⟨ζ_(i) - ζ_(i-1) ⊕ 0 | s^(i)⟩) dφ^(i)
    """
    floor = p.domain_floor(i)
    if not t_i > floor:
        raise DomainError(f"t^({i}) must exceed {floor:g} for a proper prior (got {t_i:g})")
    s_el = as_element(s_i, p.d)
    if s_el.rank != p.rank(i):
        raise DomainError(f"s^({i}) must have rank {p.rank(i)} (got {s_el.rank})")
    try:
        log_det_s = s_el.log_det()
    except NotPositiveDefiniteError:
        raise DomainError(f"s^({i}) must be positive definite for a proper prior")

    k = p.k(i)
    a_i = t_i + p.ratio(i)
    value = log_mvgamma(p.block_cone(i), a_i) - a_i * log_det_s
    if i > 1:
        prev = p.rank(i - 1)
        value += prev * k * p.d / 2.0 * _LOG_PI
        value += (t_i + p.ratio(i - 1)) * s_el.principal(prev).log_det()
    return float(value)


def posterior_update(p: Partition, s, t, x: ConeElement, mu: float) -> tuple:
    """
    Hyperparameters after observing x ~ W_r(μ, ξ): s^(i) + x_(i) and t^(i) + μ.

    Returns:
        (s', t') with s' a tuple of matrices and t' a numpy vector
    """
    p.cone.check_shape(mu)
    t = as_hyper_t(p, t)
    s = as_hyper_s(p, s)
    x = as_element(x, p.d)
    if x.rank != p.cone.r:
        raise DomainError(f"x must have rank {p.cone.r} (got {x.rank})")
    x.cholesky()
    updated = tuple(s[i - 1] + x.entries[: p.rank(i), : p.rank(i)] for i in range(1, p.h + 1))
    return updated, t + mu


# --- GROUP ACTION ---
def group_action(g, xi: ConeElement) -> ConeElement:
    """Left action g·ξ = g ξ g*."""
    g = np.asarray(g)
    if g.shape != (xi.rank, xi.rank):
        raise DomainError(f"g must be {xi.rank}x{xi.rank} (got shape {g.shape})")
    sign, _ = np.linalg.slogdet(g)
    if sign == 0:
        raise DomainError("g is singular")
    xi.cholesky()
    return ConeElement(g @ xi.entries @ g.conj().T, xi.d)


def log_chi_multiplier(p: Partition, t, g) -> float:
    """log χ_t(g) = Σ_i 2(t^(i) + n/r) log|det g^(i)|."""
    t = as_hyper_t(p, t)
    g = np.asarray(g)
    check_block_upper(p, g)
    value = 0.0
    for i, block in enumerate(block_diagonals(p, g), start=1):
        sign, logabs = np.linalg.slogdet(block)
        if sign == 0:
            raise DomainError(f"diagonal block {i} of g is singular")
        value += 2.0 * (t[i - 1] + p.cone.n_over_r) * logabs
    return float(value)


def chi_multiplier(p: Partition, t, g) -> float:
    log_value = log_chi_multiplier(p, t, g)
    try:
        return math.exp(log_value)
    except OverflowError:
        raise NumericalError(f"chi_t(g) overflows a float (log value {log_value:.6g})")


# --- PARTITIONS ---
def enumerate_partitions(r: int) -> Iterator[tuple]:
    """All ordered partitions of r, coarsest first."""
    if int(r) != r or r < 1:
        raise DomainError(f"r must be a positive integer (got {r})")
    for h in range(1, r + 1):
        for cuts in itertools.combinations(range(1, r), h - 1):
            edges = (0,) + cuts + (r,)
            yield tuple(b - a for a, b in zip(edges, edges[1:]))


# Test independently
if __name__ == "__main__":
    from app.core.specfun import ConeSpec

    part = Partition(ConeSpec(d=1, r=2), (1, 1))
    for prior in PriorKind:
        print(f"t_{prior.symbol} = {canonical_hyperparams(part, prior)}")
    print(f"log Z_2(s=I, t=0) = {log_normalization(part, 2, np.eye(2), 0.0):.6f} (log(π/2) = {math.log(math.pi / 2):.6f})")
    print(f"partitions of 3: {list(enumerate_partitions(3))}")
