"""
Symmetric Cone Linear Algebra
=============================

Positive definite real symmetric (d=1) and complex Hermitian (d=2)
matrices, partitions of the rank, and the block reparameterization
ξ ↔ φ obtained from a chain of Schur complements:

    ζ_(h) = ξ,   ζ_(i-1) = Schur complement of the bottom-right k^(i) block of ζ_(i)
    φ^(i) = (ξ^(i)_{1/2}, ξ^(i)_0)  the off-diagonal and bottom-right blocks of ζ_(i)

Block indices are 1-based throughout (i = 1..h), r_(0) = n_(0) = 0.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from app.core.errors import DomainError, NotPositiveDefiniteError
from app.core.specfun import ConeSpec

logger = logging.getLogger(__name__)

HERMITIAN_RTOL = 1e-12


# --- PARTITION ---
@dataclass(frozen=True)
class Partition:
    """Ordered partition k = (k^(1), ..., k^(h)) of the rank of a cone."""

    cone: ConeSpec
    blocks: tuple
    ranks: tuple = field(init=False, repr=False)

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise DomainError("partition needs at least one block")
        if any(int(k) != k or k < 1 for k in blocks):
            raise DomainError(f"partition blocks must be positive integers (got {blocks})")
        blocks = tuple(int(k) for k in blocks)
        if sum(blocks) != self.cone.r:
            raise DomainError(f"partition {blocks} does not sum to r = {self.cone.r}")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "ranks", tuple(np.cumsum((0,) + blocks).tolist()))

    @classmethod
    def parse(cls, cone: ConeSpec, text: str) -> "Partition":
        """Build a partition from text such as "1,2"."""
        try:
            blocks = tuple(int(part) for part in text.split(","))
        except ValueError:
            raise DomainError(f"partition must be comma-separated integers (got {text!r})")
        return cls(cone, blocks)

    @classmethod
    def split(cls, cone: ConeSpec, k: int) -> "Partition":
        """Two-block partition (k, r - k)."""
        if cone.r < 2 or not 0 < k < cone.r:
            raise DomainError(f"k must satisfy 0 < k < r = {cone.r} (got {k})")
        return cls(cone, (k, cone.r - k))

    @property
    def h(self) -> int:
        return len(self.blocks)

    @property
    def d(self) -> int:
        return self.cone.d

    def k(self, i: int) -> int:
        """Block size k^(i)."""
        return self.blocks[self._index(i) - 1]

    def rank(self, i: int) -> int:
        """Cumulative rank r_(i); rank(0) = 0."""
        if not 0 <= i <= self.h:
            raise DomainError(f"block index must be in 0..{self.h} (got {i})")
        return self.ranks[i]

    def dim(self, i: int) -> int:
        """Dimension n_(i) of the cone of rank r_(i)."""
        ri = self.rank(i)
        return ri + ri * (ri - 1) * self.d // 2

    def block_dim(self, i: int) -> int:
        """m^(i) = k^(i) + k^(i)(k^(i)-1)d/2."""
        k = self.k(i)
        return k + k * (k - 1) * self.d // 2

    def ratio(self, i: int) -> float:
        """n_(i)/r_(i) written as (r_(i)-1)d/2 + 1, for i >= 1."""
        return (self.rank(self._index(i)) - 1) * self.d / 2.0 + 1.0

    def sub_cone(self, i: int) -> ConeSpec:
        return ConeSpec(d=self.d, r=self.rank(self._index(i)))

    def block_cone(self, i: int) -> ConeSpec:
        return ConeSpec(d=self.d, r=self.k(i))

    def domain_floor(self, i: int, mu: float = 0.0) -> float:
        """Lower end -μ - ((r_(i)-k^(i))/2)d - 1 of the proper domain of t^(i)."""
        i = self._index(i)
        return -mu - (self.rank(i) - self.k(i)) * self.d / 2.0 - 1.0

    def label(self) -> str:
        return ",".join(str(k) for k in self.blocks)

    def _index(self, i: int) -> int:
        if int(i) != i or not 1 <= i <= self.h:
            raise DomainError(f"block index must be in 1..{self.h} (got {i})")
        return int(i)


# --- CONE ELEMENTS ---
def _hermitian_part(entries: np.ndarray, d: int) -> np.ndarray:
    """Validate shape and symmetry and return the exact Hermitian part."""
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] == 0:
        raise DomainError(f"cone element must be a non-empty square matrix (got shape {entries.shape})")
    if d == 1:
        if np.iscomplexobj(entries):
            if np.any(np.abs(entries.imag) > HERMITIAN_RTOL * max(1.0, np.abs(entries).max())):
                raise DomainError("d=1 cone element has non-zero imaginary part")
            entries = entries.real
        entries = entries.astype(float)
    else:
        entries = entries.astype(complex)

    scale = max(1.0, float(np.abs(entries).max()))
    asym = float(np.abs(entries - entries.conj().T).max())
    if asym > HERMITIAN_RTOL * scale:
        raise DomainError(f"matrix is not {'symmetric' if d == 1 else 'Hermitian'} (deviation {asym:.3g})")
    return 0.5 * (entries + entries.conj().T)


@dataclass(frozen=True, eq=False)
class ConeElement:
    """
    Real symmetric (d=1) or complex Hermitian (d=2) r×r matrix.

    Entries are stored read-only; positive definiteness is checked lazily by
    `is_pd` so the same type also carries semi-definite hyperparameters.
    """

    entries: np.ndarray
    d: int = 1

    def __post_init__(self):
        if self.d not in (1, 2):
            raise DomainError(f"d must be 1 or 2 (got {self.d})")
        entries = _hermitian_part(np.asarray(self.entries), self.d)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def identity(cls, cone: ConeSpec) -> "ConeElement":
        return cls(np.eye(cone.r), cone.d)

    @property
    def rank(self) -> int:
        return self.entries.shape[0]

    @property
    def cone(self) -> ConeSpec:
        return ConeSpec(d=self.d, r=self.rank)

    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor; raises NotPositiveDefiniteError on breakdown."""
        try:
            return linalg.cholesky(self.entries, lower=True)
        except linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from exc

    def is_pd(self) -> bool:
        try:
            self.cholesky()
        except NotPositiveDefiniteError:
            return False
        return True

    def log_det(self) -> float:
        return log_det(self)

    def inv(self) -> "ConeElement":
        chol = self.cholesky()
        eye = np.eye(self.rank)
        inv_chol = linalg.solve_triangular(chol, eye, lower=True)
        return ConeElement(inv_chol.conj().T @ inv_chol, self.d)

    def principal(self, m: int) -> "ConeElement":
        """Top-left m×m block."""
        if not 0 < m <= self.rank:
            raise DomainError(f"principal block size must be in 1..{self.rank} (got {m})")
        return ConeElement(self.entries[:m, :m], self.d)

    def inner(self, other: "ConeElement") -> float:
        return inner(self.entries, other.entries)

    def __add__(self, other: "ConeElement") -> "ConeElement":
        return ConeElement(self.entries + other.entries, max(self.d, other.d))

    def __repr__(self) -> str:
        return f"ConeElement(d={self.d}, entries={self.entries.tolist()})"


def as_element(x, d: int) -> ConeElement:
    """Coerce an array or ConeElement to a ConeElement of Peirce invariant d."""
    if isinstance(x, ConeElement):
        if x.d != d:
            return ConeElement(x.entries, d)
        return x
    return ConeElement(np.asarray(x), d)


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """
    Trace inner product Re tr(a b*) of equally shaped blocks.

    For Hermitian a, b this is tr(ab). Off-diagonal blocks are weighted by
    the caller (they appear twice in the full matrix).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DomainError(f"inner product of blocks with shapes {a.shape} and {b.shape}")
    return float(np.real(np.vdot(b, a)))


def log_det(x: ConeElement) -> float:
    """log |x| through the Cholesky factor; raises for non-PD input."""
    chol = x.cholesky()
    return float(2.0 * np.sum(np.log(np.real(np.diag(chol)))))


def batch_log_det(stack: np.ndarray) -> np.ndarray:
    """log-determinants of a (..., r, r) stack of Hermitian PD matrices."""
    try:
        chol = np.linalg.cholesky(stack)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"stack holds a non positive definite matrix: {exc}") from exc
    diag = np.real(np.diagonal(chol, axis1=-2, axis2=-1))
    return 2.0 * np.sum(np.log(diag), axis=-1)


def batch_log_abs_det(stack: np.ndarray) -> np.ndarray:
    """log|det| of a (..., r, r) stack through LU; nearly singular members do not raise."""
    _, logabs = np.linalg.slogdet(stack)
    return logabs


def _blocks(x: np.ndarray, split: int):
    return x[:split, :split], x[:split, split:], x[split:, split:]


def schur_complement(x: ConeElement, split: int) -> ConeElement:
    """
    Top-left Schur complement x₁ - x_{1/2} x₀⁻¹ x_{1/2}* of a PD matrix.

    Args:
        x: Positive definite matrix of rank r
        split: Size of the top-left block, 0 < split < r

    Returns:
        The split×split Schur complement (positive definite)
    """
    if not 0 < split < x.rank:
        raise DomainError(f"split must satisfy 0 < split < r = {x.rank} (got {split})")
    x.cholesky()
    x1, xh, x0 = _blocks(x.entries, split)
    chol0 = ConeElement(x0, x.d).cholesky()
    w = linalg.solve_triangular(chol0, xh.conj().T, lower=True)
    return ConeElement(x1 - w.conj().T @ w, x.d)


# --- PHI PARAMETERIZATION ---
@dataclass(frozen=True, eq=False)
class PhiParam:
    """
    Reduced parameter φ = (ζ_(1), {ξ^(i)_{1/2}, ξ^(i)_0}_{i=2..h}).

    `halves[j]` and `blocks0[j]` belong to block i = j + 2.
    """

    zeta_1: ConeElement
    halves: tuple = ()
    blocks0: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "halves", tuple(np.asarray(a) for a in self.halves))
        object.__setattr__(self, "blocks0", tuple(self.blocks0))
        if len(self.halves) != len(self.blocks0):
            raise DomainError("PhiParam needs one off-diagonal block per diagonal block")
        if not self.zeta_1.is_pd():
            raise NotPositiveDefiniteError("zeta_1 is not positive definite")
        for j, block in enumerate(self.blocks0):
            if not block.is_pd():
                raise NotPositiveDefiniteError(f"xi_0 of block {j + 2} is not positive definite")
            if self.halves[j].shape[1] != block.rank:
                raise DomainError(f"xi_half of block {j + 2} does not match xi_0")

    @property
    def h(self) -> int:
        return len(self.blocks0) + 1

    @property
    def d(self) -> int:
        return self.zeta_1.d

    def xi0(self, i: int) -> ConeElement:
        """ξ^(i)_0, with ξ^(1)_0 read as ζ_(1)."""
        return self.zeta_1 if i == 1 else self.blocks0[i - 2]

    def xi_half(self, i: int) -> np.ndarray:
        if i < 2:
            raise DomainError("xi_half exists for blocks i >= 2 only")
        return self.halves[i - 2]

    def conditional_block(self, i: int) -> np.ndarray:
        """
        ζ_(i) - (ζ_(i-1) ⊕ 0), the part of ζ_(i) carried by φ^(i):

            [[ξ_{1/2} ξ_0⁻¹ ξ_{1/2}*, ξ_{1/2}], [ξ_{1/2}*, ξ_0]]
        """
        if i == 1:
            return np.array(self.zeta_1.entries)
        xh = self.xi_half(i)
        x0 = self.xi0(i)
        top = xh @ x0.inv().entries @ xh.conj().T
        return np.block([[top, xh], [xh.conj().T, x0.entries]])

    @classmethod
    def identity(cls, p: Partition) -> "PhiParam":
        halves = tuple(np.zeros((p.rank(i - 1), p.k(i))) for i in range(2, p.h + 1))
        blocks0 = tuple(ConeElement.identity(p.block_cone(i)) for i in range(2, p.h + 1))
        return cls(ConeElement.identity(p.sub_cone(1)), halves, blocks0)


def schur_chain(p: Partition, xi: ConeElement) -> list:
    """[ζ_(1), ..., ζ_(h)] for a PD ξ, ζ_(h) = ξ."""
    _check_conformable(p, xi)
    xi.cholesky()
    zetas = [xi]
    for i in range(p.h, 1, -1):
        zetas.append(schur_complement(zetas[-1], p.rank(i - 1)))
    return zetas[::-1]


def xi_to_phi(p: Partition, xi: ConeElement) -> PhiParam:
    """Map ξ to its reduced parameter φ."""
    zetas = schur_chain(p, xi)
    halves = []
    blocks0 = []
    for i in range(2, p.h + 1):
        _, xh, x0 = _blocks(zetas[i - 1].entries, p.rank(i - 1))
        halves.append(np.array(xh))
        blocks0.append(ConeElement(x0, xi.d))
    return PhiParam(zetas[0], tuple(halves), tuple(blocks0))


def phi_to_xi(p: Partition, phi: PhiParam) -> ConeElement:
    """Rebuild ξ from φ: ζ_(i) = [[ζ_(i-1) + ξ_{1/2} ξ_0⁻¹ ξ_{1/2}*, ξ_{1/2}], [ξ_{1/2}*, ξ_0]]."""
    if phi.h != p.h or phi.zeta_1.rank != p.rank(1):
        raise DomainError(f"phi does not match partition {p.label()}")
    zeta = np.array(phi.zeta_1.entries)
    for i in range(2, p.h + 1):
        if phi.xi_half(i).shape != (p.rank(i - 1), p.k(i)):
            raise DomainError(f"xi_half of block {i} has shape {phi.xi_half(i).shape}")
        block = phi.conditional_block(i)
        block[: p.rank(i - 1), : p.rank(i - 1)] += zeta
        zeta = block
    xi = ConeElement(zeta, phi.d)
    xi.cholesky()
    return xi


def _check_conformable(p: Partition, x: ConeElement) -> None:
    if x.rank != p.cone.r or x.d != p.d:
        raise DomainError(
            f"matrix of rank {x.rank} (d={x.d}) does not match cone r={p.cone.r}, d={p.d}"
        )


# --- RANDOM ELEMENTS ---
def random_pd(cone: ConeSpec, rng: np.random.Generator, jitter: float = 1e-3) -> ConeElement:
    """G G* + jitter·I with standard normal entries of G (real and imaginary parts for d=2)."""
    g = rng.standard_normal((cone.r, cone.r))
    if cone.d == 2:
        g = g + 1j * rng.standard_normal((cone.r, cone.r))
    return ConeElement(g @ g.conj().T + jitter * np.eye(cone.r), cone.d)


def random_upper_block(p: Partition, rng: np.random.Generator, spread: float = 0.5) -> np.ndarray:
    """Random invertible block-upper-triangular matrix conformable with the partition."""
    r = p.cone.r
    g = rng.standard_normal((r, r))
    if p.d == 2:
        g = g + 1j * rng.standard_normal((r, r))
    for i in range(1, p.h + 1):
        lo, hi = p.rank(i - 1), p.rank(i)
        g[hi:, lo:hi] = 0.0
        g[lo:hi, lo:hi] += (1.0 + spread) * np.eye(hi - lo) * np.sqrt(hi - lo)
    return g


def block_diagonals(p: Partition, g: np.ndarray) -> list:
    """Diagonal blocks g^(i) of a block matrix."""
    return [g[p.rank(i - 1) : p.rank(i), p.rank(i - 1) : p.rank(i)] for i in range(1, p.h + 1)]


def check_block_upper(p: Partition, g: np.ndarray) -> None:
    """Raise DomainError unless g is r×r and zero below its diagonal blocks."""
    g = np.asarray(g)
    r = p.cone.r
    if g.shape != (r, r):
        raise DomainError(f"g must be {r}x{r} (got shape {g.shape})")
    for i in range(1, p.h + 1):
        if np.any(g[p.rank(i) :, p.rank(i - 1) : p.rank(i)] != 0):
            raise DomainError(f"g is not block-upper-triangular for partition {p.label()}")


# Smoke test
if __name__ == "__main__":
    part = Partition(ConeSpec(d=1, r=2), (1, 1))
    xi = ConeElement(np.array([[2.0, 1.0], [1.0, 2.0]]))
    phi = xi_to_phi(part, xi)
    print("=" * 50)
    print(f"zeta_1 = {phi.zeta_1.entries.tolist()}, xi_half = {phi.xi_half(2).tolist()}, xi_0 = {phi.xi0(2).entries.tolist()}")
    print(f"log|xi| = {log_det(xi):.6f}, round trip = {phi_to_xi(part, phi).entries.tolist()}")
