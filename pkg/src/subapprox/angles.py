"""Canonical (principal) angles between subspaces at configurable precision.

All computations run under ``mpmath`` working precision taken from the
operands, so proximities as small as H^-6 keep relative accuracy.  The
sines of the principal angles are obtained two ways and merged:

* cosines from the singular values of the d x e matrix of inner products
  of orthonormal bases (accurate for large angles);
* sines from the singular values of the projection complement
  (I - P_A) Q_B (accurate for small angles, no cancellation near cos ~ 1).

Error bounds are first-order estimates, not certified enclosures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from mpmath import mp

from .exact import IntMat, gram_det_sq


class PrecisionError(ArithmeticError):
    """Raised when a computation cannot reach the requested accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


def _err_margin_bits(n: int) -> int:
    return max(1, n).bit_length() + 8


def _to_mpf(x):
    from fractions import Fraction

    if isinstance(x, Fraction):
        return mp.mpf(x.numerator) / x.denominator
    return mp.mpf(x)


def _mat_from_rows(rows) -> "mp.matrix":
    m = mp.matrix(len(rows), len(rows[0]))
    for i, r in enumerate(rows):
        for j, x in enumerate(r):
            m[i, j] = x
    return m


def _svd_values(a: "mp.matrix"):
    if a.rows < a.cols:
        a = a.T
    s = mp.svd_r(a, compute_uv=False)
    return sorted((s[i] for i in range(s.rows)), reverse=True)


@dataclass(frozen=True)
class RealSubspace:
    """A subspace of R^n held as an orthonormal basis of mpmath reals."""

    n: int
    dim: int
    basis: tuple[tuple, ...]  # dim rows of length n, orthonormal
    precision_bits: int

    @classmethod
    def from_vectors(cls, vectors: Sequence[Sequence], precision_bits: int = 128) -> "RealSubspace":
        """Orthonormalize spanning vectors (modified Gram-Schmidt, one
        re-orthogonalization pass) at the requested precision."""
        vecs = list(vectors)
        if not vecs:
            raise ValueError("no vectors")
        n = len(vecs[0])
        with mp.workprec(precision_bits):
            rows = [[_to_mpf(x) for x in v] for v in vecs]
            if any(len(r) != n for r in rows):
                raise ValueError("vector length mismatch")
            ortho: list[list] = []
            floor = mp.mpf(2) ** (-(precision_bits // 2))
            for r in rows:
                v = list(r)
                for _ in range(2):  # MGS + one re-orthogonalization pass
                    for u in ortho:
                        c = mp.fsum(a * b for a, b in zip(v, u))
                        v = [a - c * b for a, b in zip(v, u)]
                nrm = mp.sqrt(mp.fsum(a * a for a in v))
                if nrm < floor:
                    raise ValueError("dependent (or vanishing) vector in basis")
                ortho.append([a / nrm for a in v])
            return cls(n, len(ortho), tuple(tuple(r) for r in ortho), precision_bits)

    def mat(self) -> "mp.matrix":
        return _mat_from_rows(self.basis)

    def gram_residual(self):
        """max |<b_i, b_j> - delta_ij|, for orthonormality checks."""
        with mp.workprec(self.precision_bits):
            worst = mp.mpf(0)
            for i, u in enumerate(self.basis):
                for j, v in enumerate(self.basis):
                    g = mp.fsum(a * b for a, b in zip(u, v))
                    worst = max(worst, abs(g - (1 if i == j else 0)))
            return worst

    def contains_residual(self, vector) -> "mp.mpf":
        """Distance from a unit-normalized vector to the subspace."""
        with mp.workprec(self.precision_bits):
            v = [_to_mpf(x) for x in vector]
            nrm = mp.sqrt(mp.fsum(a * a for a in v))
            v = [a / nrm for a in v]
            for u in self.basis:
                c = mp.fsum(a * b for a, b in zip(v, u))
                v = [a - c * b for a, b in zip(v, u)]
            return mp.sqrt(mp.fsum(a * a for a in v))


@dataclass(frozen=True)
class AngleProfile:
    """Ascending sines of the principal angles, their product, and an error bound."""

    sines: tuple
    phi: object
    err: object

    def __post_init__(self):
        for a, b in zip(self.sines, self.sines[1:]):
            assert a <= b + self.err


def sin_angle(x: Sequence, y: Sequence, precision_bits: int = 128):
    """Sine of the acute angle between two nonzero vectors.

    Computed as the norm of y's component orthogonal to x, over |y|; this
    keeps relative accuracy for nearly-colinear vectors.
    """
    with mp.workprec(precision_bits):
        xv = [_to_mpf(a) for a in x]
        yv = [_to_mpf(a) for a in y]
        nx = mp.sqrt(mp.fsum(a * a for a in xv))
        ny = mp.sqrt(mp.fsum(a * a for a in yv))
        if nx == 0 or ny == 0:
            raise ValueError("zero vector")
        xv = [a / nx for a in xv]
        c = mp.fsum(a * b for a, b in zip(xv, yv))
        w = [a - c * b for a, b in zip(yv, xv)]
        s = mp.sqrt(mp.fsum(a * a for a in w)) / ny
        return min(s, mp.mpf(1))


def _working_prec(a: RealSubspace, b: RealSubspace, precision_bits=None) -> int:
    if precision_bits is not None:
        return precision_bits
    return min(a.precision_bits, b.precision_bits)


def canonical_angles(a: RealSubspace, b: RealSubspace, precision_bits: int | None = None) -> AngleProfile:
    """Sines of the min(dim a, dim b) principal angles, ascending."""
    if a.n != b.n:
        raise ValueError("ambient dimension mismatch")
    prec = _working_prec(a, b, precision_bits)
    t = min(a.dim, b.dim)
    with mp.workprec(prec):
        small, large = (a, b) if a.dim <= b.dim else (b, a)
        X = large.mat()   # rows orthonormal
        Y = small.mat()
        G = Y * X.T       # t x dim(large)
        cosines = _svd_values(G)  # descending <-> angles ascending
        # projection complement of the smaller basis off the larger subspace
        S = Y - (Y * X.T) * X
        sines_small = sorted(_svd_values(S))
        err = mp.mpf(2) ** (-prec + _err_margin_bits(a.n * (a.dim + b.dim)))
        sines = []
        for i in range(t):
            c = min(cosines[i], mp.mpf(1))
            if c * c >= mp.mpf("0.5"):
                s = sines_small[i]
            else:
                s = mp.sqrt((1 - c) * (1 + c))
            sines.append(min(max(s, mp.mpf(0)), mp.mpf(1)))
        sines.sort()
        prod = mp.mpf(1)
        for s in sines:
            prod *= s
        return AngleProfile(tuple(sines), prod, err)


def principal_pairs(a: RealSubspace, b: RealSubspace, precision_bits: int | None = None):
    """Biorthogonal principal-vector pairs (x_i, y_i) with x_i . y_j = delta cos(theta_i).

    Pairs are ordered by ascending angle.  Returns (pairs, profile).
    """
    if a.n != b.n:
        raise ValueError("ambient dimension mismatch")
    if a.dim != b.dim:
        raise ValueError("principal pairs need equal dimensions")
    prec = _working_prec(a, b, precision_bits)
    with mp.workprec(prec):
        X, Y = a.mat(), b.mat()
        G = X * Y.T
        U, s, V = mp.svd_r(G)
        XR = U.T * X
        YR = V * Y
        pairs = []
        for i in range(a.dim):
            xi = tuple(XR[i, j] for j in range(a.n))
            yi = tuple(YR[i, j] for j in range(a.n))
            # fix signs so the pair has nonnegative inner product
            ip = mp.fsum(p * q for p, q in zip(xi, yi))
            if ip < 0:
                yi = tuple(-q for q in yi)
            pairs.append((xi, yi))
    profile = canonical_angles(a, b, precision_bits=prec)
    return pairs, profile


def phi(a: RealSubspace, b: RealSubspace, precision_bits: int | None = None):
    """Product of the sines of all principal angles."""
    return canonical_angles(a, b, precision_bits).phi


def phi_via_det(a: RealSubspace, b_lattice_basis: IntMat, precision_bits: int | None = None):
    """Proximity product via the determinant route, for complementary dimensions.

    With M the square matrix stacking an orthonormal basis of A and a lattice
    basis of B as columns, returns |det M| / (D(A-basis) * H(B)); it must
    agree with :func:`phi` within the combined error bounds.
    """
    e = b_lattice_basis.cols
    n = b_lattice_basis.rows
    if a.n != n or a.dim + e != n:
        raise ValueError("phi_via_det requires dim A + dim B = n")
    prec = precision_bits if precision_bits is not None else a.precision_bits
    hsq = gram_det_sq(b_lattice_basis)
    with mp.workprec(prec):
        m = mp.matrix(n, n)
        for j in range(a.dim):
            for i in range(n):
                m[i, j] = a.basis[j][i]
        bcols = b_lattice_basis.columns
        for j in range(e):
            for i in range(n):
                m[i, a.dim + j] = bcols[j][i]
        det = mp.det(m)
        # D of an orthonormal basis is 1 up to roundoff; compute it anyway
        X = a.mat()
        gram = X * X.T
        d_a = mp.sqrt(mp.det(gram))
        return abs(det) / (d_a * mp.sqrt(mp.mpf(hsq)))
