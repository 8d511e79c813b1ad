"""Exhaustive-by-height enumeration of rational subspaces and record scans.

The enumerator sweeps e-tuples of primitive integer vectors whose norms obey
the Minkowski second-theorem product bound, reduces each wedge to its
primitive Plucker vector and dedups on the canonical key.  For e <= 3 the
successive minima of a lattice are attained by a basis, so the product
bound lam_1 ... lam_e <= (2^e / V_e) H gives a complete sweep; completeness
for (n, e) = (4, 2) is additionally cross-checked against an independent
sweep of primitive Plucker vectors on the quadric (see
:func:`plucker_sweep_count_4_2`).

Scanning a real target over an enumeration produces the strictly-improving
record sequence of (height, psi_j) observations; a least-squares fit of
log psi_j against log height estimates the approximation exponent.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
from mpmath import mp

from .angles import RealSubspace, canonical_angles
from .exact import IntMat, PluckerVec, laplace_sign, normalize_plucker, subsets, wedge_plucker
from .grassmann import RationalSubspace, from_plucker, plucker_relations, real_view

# squared Minkowski constants (2^e / V_e)^2 for the product of successive minima
_MINK_SQ = {1: 1.0, 2: 16.0 / math.pi ** 2, 3: 36.0 / math.pi ** 2}
_SHARD_SIZE = 192  # first-vector candidates per shard; fixed so cache layout is stable


class CacheCorruption(ValueError):
    pass


def _height_cap_sq(height_max) -> int:
    f = Fraction(height_max)
    if f < 1:
        raise ValueError("height_max must be >= 1")
    return (f * f).numerator // (f * f).denominator


def _integer_ball(n: int, cap_sq: int) -> np.ndarray:
    """Primitive, sign-canonical integer vectors with 0 < |v|^2 <= cap_sq.

    Sorted by (norm^2, lexicographic).  Sign-canonical means the first
    nonzero coordinate is positive, so each line appears once.
    """
    r = math.isqrt(cap_sq)
    chunks = []
    for k in range(n):  # k leading zeros, then a positive coordinate
        tail = n - k - 1
        for lead in range(1, r + 1):
            budget = cap_sq - lead * lead
            if budget < 0:
                break
            if tail == 0:
                v = np.zeros((1, n), dtype=np.int64)
                v[0, k] = lead
                chunks.append(v)
                continue
            rr = math.isqrt(budget)
            rng = np.arange(-rr, rr + 1, dtype=np.int64)
            grids = np.meshgrid(*([rng] * tail), indexing="ij")
            rest = np.stack([g.ravel() for g in grids], axis=1)
            keep = (rest * rest).sum(1) <= budget
            rest = rest[keep]
            v = np.zeros((len(rest), n), dtype=np.int64)
            v[:, k] = lead
            v[:, k + 1:] = rest
            chunks.append(v)
    V = np.concatenate(chunks) if chunks else np.zeros((0, n), dtype=np.int64)
    g = np.gcd.reduce(np.abs(V), axis=1)
    V = V[g == 1]
    n2 = (V * V).sum(1)
    order = np.lexsort(tuple(V[:, c] for c in range(n - 1, -1, -1)) + (n2,))
    return V[order]


def _canonical_sign_rows(W: np.ndarray) -> np.ndarray:
    idx = np.argmax(W != 0, axis=1)
    s = np.sign(np.take_along_axis(W, idx[:, None], 1))[:, 0]
    return W * s[:, None]


def _pack_rows(W: np.ndarray, bound: int) -> np.ndarray:
    base = 2 * bound + 1
    if base ** W.shape[1] >= 2 ** 62:
        raise OverflowError("key packing overflow")
    p = np.zeros(len(W), dtype=np.int64)
    for k in range(W.shape[1]):
        p = p * base + (W[:, k] + bound)
    return p


def _unpack_rows(p: np.ndarray, ncols: int, bound: int) -> np.ndarray:
    base = 2 * bound + 1
    out = np.zeros((len(p), ncols), dtype=np.int64)
    for k in range(ncols - 1, -1, -1):
        out[:, k] = p % base - bound
        p = p // base
    return out


@dataclass
class Enumeration:
    """The set of rational subspaces of dimension e and height <= height_max.

    ``pluckers`` holds one canonical primitive Plucker vector per row,
    sorted by (squared height, lexicographic coordinates).
    """

    n: int
    e: int
    height_max_sq: int
    pluckers: np.ndarray
    truncated: bool = False
    pair_count: int = 0

    def __len__(self) -> int:
        return len(self.pluckers)

    @property
    def heights_sq(self) -> np.ndarray:
        return (self.pluckers * self.pluckers).sum(1)

    def coords_at(self, i: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.pluckers[i])

    def key_at(self, i: int) -> str:
        return "%d %d : %s" % (self.n, self.e, " ".join(map(str, self.coords_at(i))))

    def plucker_at(self, i: int) -> PluckerVec:
        return PluckerVec(self.n, self.e, self.coords_at(i))

    def subspace_at(self, i: int) -> RationalSubspace:
        return from_plucker(self.plucker_at(i))

    def subspaces(self) -> Iterator[RationalSubspace]:
        for i in range(len(self)):
            yield self.subspace_at(i)

    def restrict(self, height_max) -> "Enumeration":
        cap = _height_cap_sq(height_max)
        if cap > self.height_max_sq:
            raise ValueError("cannot restrict to a larger height")
        if cap == self.height_max_sq:
            return self
        keep = self.heights_sq <= cap
        return Enumeration(self.n, self.e, cap, self.pluckers[keep],
                           truncated=self.truncated, pair_count=self.pair_count)


def _sort_pluckers(P: np.ndarray) -> np.ndarray:
    if len(P) == 0:
        return P
    n2 = (P * P).sum(1)
    order = np.lexsort(tuple(P[:, c] for c in range(P.shape[1] - 1, -1, -1)) + (n2,))
    return P[order]


def _sweep_shard_e2(V, n2, lo_idx, hi_idx, prod_cap, hmax_sq, combs):
    """Process first-vector candidates V[lo_idx:hi_idx]; returns packed keys."""
    bound = math.isqrt(hmax_sq)
    packs = []
    pairs = 0
    for a in range(lo_idx, hi_idx):
        v1 = V[a]
        k1 = int(n2[a])
        lo = np.searchsorted(n2, k1, side="left")
        hi = np.searchsorted(n2, prod_cap // k1, side="right")
        if hi <= lo:
            continue
        W = V[lo:hi]
        pairs += len(W)
        cols = [v1[i] * W[:, j] - v1[j] * W[:, i] for (i, j) in combs]
        Wg = np.stack(cols, axis=1)
        g = np.gcd.reduce(np.abs(Wg), axis=1)
        ok = g > 0
        Wg = Wg[ok]
        g = g[ok]
        Wr = Wg // g[:, None]
        nn = (Wr * Wr).sum(1)
        Wr = Wr[nn <= hmax_sq]
        if len(Wr):
            Wr = _canonical_sign_rows(Wr)
            packs.append(np.unique(_pack_rows(Wr, bound)))
    packed = np.unique(np.concatenate(packs)) if packs else np.zeros(0, dtype=np.int64)
    return packed, pairs


def _enumerate_e1(n: int, hmax_sq: int) -> np.ndarray:
    return _integer_ball(n, hmax_sq)


def _enumerate_generic(n: int, e: int, hmax_sq: int):
    """Reference sweep (pure python, exact wedges); kept as the oracle the
    vectorized routes are tested against."""
    prod_cap = int(_MINK_SQ[e] * hmax_sq * (1 + 1e-9)) + 1
    V = _integer_ball(n, prod_cap)
    n2 = (V * V).sum(1)
    vecs = [tuple(int(x) for x in v) for v in V]
    keys = set()
    pairs = 0

    def rec(start, chosen, prod):
        nonlocal pairs
        if len(chosen) == e:
            pairs += 1
            try:
                raw = wedge_plucker(IntMat.from_columns(chosen))
            except ValueError:
                return
            pl = normalize_plucker(raw, n, e)
            if pl.norm_sq <= hmax_sq:
                keys.add(pl.coords)
            return
        for i in range(start, len(vecs)):
            p = prod * int(n2[i])
            if p > prod_cap:
                break
            rec(i, chosen + [vecs[i]], p)

    rec(0, [], 1)
    P = np.array(sorted(keys), dtype=np.int64) if keys else np.zeros((0, math.comb(n, e)), dtype=np.int64)
    return P, pairs


def _enumerate_e3(n: int, hmax_sq: int, max_pairs=None):
    """Triple sweep with the innermost vector vectorized: the wedge of
    (v1, v2, v3) is linear in v3 once the pair minors of (v1, v2) are known."""
    prod_cap = int(_MINK_SQ[3] * hmax_sq * (1 + 1e-9)) + 1
    V = _integer_ball(n, prod_cap)
    n2 = (V * V).sum(1)
    bound = math.isqrt(hmax_sq)
    pair_idx = {(i, j): k for k, (i, j) in enumerate(itertools.combinations(range(n), 2))}
    triples = list(itertools.combinations(range(n), 3))
    packs = []
    raw_keys: set | None = None
    count = 0
    truncated = False
    for a in range(len(V)):
        k1 = int(n2[a])
        if k1 ** 3 > prod_cap:
            break
        v1 = V[a]
        for b in range(a, len(V)):
            k2 = int(n2[b])
            if k1 * k2 * k2 > prod_cap:
                break
            v2 = V[b]
            w = {}
            for (i, j), k in pair_idx.items():
                w[(i, j)] = int(v1[i] * v2[j] - v1[j] * v2[i])
            if all(x == 0 for x in w.values()):
                continue
            lo = np.searchsorted(n2, k2, side="left")
            hi = np.searchsorted(n2, prod_cap // (k1 * k2), side="right")
            if hi <= lo:
                continue
            W3 = V[lo:hi]
            count += len(W3)
            cols = []
            for (t1, t2, t3) in triples:
                cols.append(W3[:, t1] * w[(t2, t3)]
                            - W3[:, t2] * w[(t1, t3)]
                            + W3[:, t3] * w[(t1, t2)])
            Wg = np.stack(cols, axis=1)
            g = np.gcd.reduce(np.abs(Wg), axis=1)
            ok = g > 0
            Wg = Wg[ok]
            g = g[ok]
            Wr = Wg // g[:, None]
            nn = (Wr * Wr).sum(1)
            Wr = Wr[nn <= hmax_sq]
            if len(Wr) == 0:
                continue
            Wr = _canonical_sign_rows(Wr)
            if raw_keys is None:
                try:
                    packs.append(np.unique(_pack_rows(Wr, bound)))
                except OverflowError:
                    raw_keys = set()
                    for arr in packs:
                        for row in _unpack_rows(arr, len(triples), bound):
                            raw_keys.add(tuple(int(x) for x in row))
                    packs = []
            if raw_keys is not None:
                raw_keys.update(map(tuple, Wr.tolist()))
            if max_pairs is not None and count > max_pairs:
                truncated = True
                break
        if truncated:
            break
    if raw_keys is not None:
        P = np.array(sorted(raw_keys), dtype=np.int64) if raw_keys else \
            np.zeros((0, len(triples)), dtype=np.int64)
    else:
        merged = np.unique(np.concatenate(packs)) if packs else np.zeros(0, dtype=np.int64)
        P = _unpack_rows(merged, len(triples), bound)
    return P, count, truncated


def enumerate_subspaces(n: int, e: int, height_max, *, cache_path: str | None = None,
                        workers: int = 1, max_pairs: int | None = None) -> Enumeration:
    """Every rational subspace of dimension e in R^n with height <= height_max.

    Dedup is by canonical Plucker key; the result is sorted by
    (height^2, lexicographic key), so downstream consumers are independent
    of enumeration order.  ``max_pairs`` bounds the candidate sweep; when it
    is exhausted the result carries ``truncated=True`` (never silent).
    """
    if not (1 <= e <= n):
        raise ValueError("need 1 <= e <= n")
    if e > 3:
        raise ValueError("enumeration supports e <= 3 (desk scale)")
    hmax_sq = _height_cap_sq(height_max)

    if cache_path is not None and os.path.exists(cache_path):
        cached = _load_cache(cache_path, n, e, hmax_sq)
        if cached is not None:
            return cached

    if e == 1:
        P = _enumerate_e1(n, hmax_sq)
        enum = Enumeration(n, e, hmax_sq, _sort_pluckers(P), pair_count=len(P))
    elif e == 2:
        enum = _enumerate_e2(n, hmax_sq, workers=workers, max_pairs=max_pairs,
                             cache_path=cache_path)
    else:
        P, pairs, truncated = _enumerate_e3(n, hmax_sq, max_pairs=max_pairs)
        enum = Enumeration(n, e, hmax_sq, _sort_pluckers(P), pair_count=pairs,
                           truncated=truncated)

    if cache_path is not None and (e != 2 or not os.path.exists(cache_path)):
        _write_cache_full(cache_path, enum)
    return enum


def _enumerate_e2(n, hmax_sq, *, workers=1, max_pairs=None, cache_path=None) -> Enumeration:
    prod_cap = int(_MINK_SQ[2] * hmax_sq * (1 + 1e-9)) + 1
    v1_cap = math.isqrt(prod_cap)
    V = _integer_ball(n, prod_cap)
    n2 = (V * V).sum(1)
    m = int(np.searchsorted(n2, v1_cap, side="right"))
    combs = list(itertools.combinations(range(n), 2))
    shards = [(s, min(s + _SHARD_SIZE, m)) for s in range(0, m, _SHARD_SIZE)]

    done_shards: dict[int, np.ndarray] = {}
    resume_from = 0
    if cache_path is not None and os.path.exists(cache_path):
        loaded = _load_cache_partial(cache_path, n, 2, hmax_sq, len(shards))
        done_shards, resume_from = loaded

    results: dict[int, np.ndarray] = dict(done_shards)
    pair_total = 0
    truncated = False
    todo = [i for i in range(resume_from, len(shards))]

    def job(i):
        lo, hi = shards[i]
        return i, _sweep_shard_e2(V, n2, lo, hi, prod_cap, hmax_sq, combs)

    if todo:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for i, (packed, pairs) in pool.map(job, todo):
                    results[i] = packed
                    pair_total += pairs
                    if max_pairs is not None and pair_total > max_pairs:
                        truncated = True
                        break
        else:
            for i in todo:
                _, (packed, pairs) = job(i)
                results[i] = packed
                pair_total += pairs
                if max_pairs is not None and pair_total > max_pairs:
                    truncated = True
                    break

    # deterministic merge in shard order; a key belongs to the first shard
    # that produced it
    seen = np.zeros(0, dtype=np.int64)
    per_shard_new: list[np.ndarray] = []
    complete_upto = 0
    for i in range(len(shards)):
        if i not in results:
            truncated = True
            break
        new = np.setdiff1d(results[i], seen, assume_unique=True)
        per_shard_new.append(new)
        seen = np.union1d(seen, new)
        complete_upto = i + 1

    bound = math.isqrt(hmax_sq)
    P = _unpack_rows(seen, math.comb(n, 2), bound)
    enum = Enumeration(n, 2, hmax_sq, _sort_pluckers(P),
                       truncated=truncated, pair_count=pair_total)
    if cache_path is not None:
        _write_cache_shards(cache_path, n, 2, hmax_sq, len(shards), per_shard_new,
                            complete_upto, bound, already=len(done_shards))
    return enum


# ---------------------------------------------------------------------------
# cache format: one line per subspace `n e : p_1 ... p_N`, appended per
# completed shard, each shard closed by a `# shard <i> done` marker.
# ---------------------------------------------------------------------------

def _cache_header(n, e, hmax_sq, nshards) -> str:
    return "# subapprox-cache v1 n=%d e=%d hmax_sq=%d shards=%d" % (n, e, hmax_sq, nshards)


def _write_cache_full(path, enum: Enumeration):
    with open(path, "w") as fh:
        fh.write(_cache_header(enum.n, enum.e, enum.height_max_sq, 1) + "\n")
        for i in range(len(enum)):
            fh.write(enum.key_at(i) + "\n")
        fh.write("# shard 0 done\n")
        if not enum.truncated:
            fh.write("# end\n")


def _write_cache_shards(path, n, e, hmax_sq, nshards, per_shard_new, complete_upto,
                        bound, already=0):
    mode = "a" if already else "w"
    with open(path, mode) as fh:
        if not already:
            fh.write(_cache_header(n, e, hmax_sq, nshards) + "\n")
        for i in range(already, complete_upto):
            rows = _sort_pluckers(_unpack_rows(per_shard_new[i], math.comb(n, 2), bound))
            for r in rows:
                fh.write("%d %d : %s\n" % (n, e, " ".join(str(int(x)) for x in r)))
            fh.write("# shard %d done\n" % i)
        if complete_upto == nshards:
            fh.write("# end\n")


def _parse_cache(path, n, e, hmax_sq):
    with open(path) as fh:
        header = fh.readline().strip()
        parts = dict(p.split("=") for p in header.split()[3:]) if header.startswith("# subapprox-cache") else None
        if parts is None:
            raise CacheCorruption("not a subapprox cache: %s" % path)
        if (int(parts["n"]), int(parts["e"]), int(parts["hmax_sq"])) != (n, e, hmax_sq):
            return None, None, None
        nshards = int(parts["shards"])
        shard_rows: list[list[list[int]]] = [[]]
        done = []
        complete = False
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# shard"):
                done.append(int(line.split()[2]))
                shard_rows.append([])
            elif line == "# end":
                complete = True
            else:
                head, _, tail = line.partition(":")
                hn, he = map(int, head.split())
                if (hn, he) != (n, e):
                    raise CacheCorruption("mixed dimensions in cache %s" % path)
                shard_rows[-1].append([int(x) for x in tail.split()])
        if done != list(range(len(done))):
            raise CacheCorruption("non-contiguous shard markers in %s" % path)
        return (nshards, complete, (done, shard_rows))


def _validate_rows(rows: np.ndarray, n, e, hmax_sq):
    if len(rows) == 0:
        return
    h2 = (rows * rows).sum(1)
    if h2.max(initial=0) > hmax_sq or h2.min(initial=1) < 1:
        raise CacheCorruption("cached subspace out of height range")
    if e == 2 and n == 4:
        bad = rows[:, 0] * rows[:, 5] - rows[:, 1] * rows[:, 4] + rows[:, 2] * rows[:, 3]
        if np.any(bad != 0):
            raise CacheCorruption("cached vector fails the Plucker relation")
    else:
        rels = plucker_relations(n, e)
        for rel in rels:
            acc = np.zeros(len(rows), dtype=np.int64)
            for c, i, j in rel:
                acc += c * rows[:, i] * rows[:, j]
            if np.any(acc != 0):
                raise CacheCorruption("cached vector fails the Plucker relations")
    g = np.gcd.reduce(np.abs(rows), axis=1)
    if np.any(g != 1):
        raise CacheCorruption("cached vector is not primitive")


def _load_cache(path, n, e, hmax_sq):
    parsed = _parse_cache(path, n, e, hmax_sq)
    if parsed[0] is None:
        return None
    nshards, complete, (done, shard_rows) = parsed
    if not complete:
        return None
    rows = [r for chunk in shard_rows for r in chunk]
    P = np.array(rows, dtype=np.int64) if rows else np.zeros((0, math.comb(n, e)), dtype=np.int64)
    _validate_rows(P, n, e, hmax_sq)
    return Enumeration(n, e, hmax_sq, _sort_pluckers(P), truncated=False)


def _load_cache_partial(path, n, e, hmax_sq, nshards_expected):
    parsed = _parse_cache(path, n, e, hmax_sq)
    if parsed[0] is None:
        return {}, 0
    nshards, complete, (done, shard_rows) = parsed
    if nshards != nshards_expected:
        return {}, 0
    bound = math.isqrt(hmax_sq)
    out = {}
    for i in done:
        rows = np.array(shard_rows[i], dtype=np.int64) if shard_rows[i] else \
            np.zeros((0, math.comb(n, e)), dtype=np.int64)
        _validate_rows(rows, n, e, hmax_sq)
        out[i] = np.sort(_pack_rows(rows, bound)) if len(rows) else np.zeros(0, dtype=np.int64)
    return out, len(done)


# ---------------------------------------------------------------------------
# independent Plucker-vector sweep for (n, e) = (4, 2)
# ---------------------------------------------------------------------------

def _mobius(m: int) -> np.ndarray:
    mu = np.ones(m + 1, dtype=np.int64)
    is_comp = np.zeros(m + 1, dtype=bool)
    primes: list[int] = []
    for i in range(2, m + 1):
        if not is_comp[i]:
            primes.append(i)
            mu[i] = -1
        for p in primes:
            if i * p > m:
                break
            is_comp[i * p] = True
            if i % p == 0:
                mu[i * p] = 0
                break
            mu[i * p] = -mu[i]
    return mu


def _quadric_solutions_4_2(cap_sq: int) -> int:
    """Nonzero integer 6-tuples with p1 p6 - p2 p5 + p3 p4 = 0 and norm^2 <= cap_sq.

    Counted by convolving the joint (product, norm^2) distribution of
    coordinate pairs; FFT sums stay far below 2^53 at desk scale.
    """
    r = math.isqrt(cap_sq)
    xs = np.arange(-r, r + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    m = (X * X + Y * Y) <= cap_sq
    r2 = r * r
    P = (X * Y)[m].ravel() + r2
    S = (X * X + Y * Y)[m].ravel()
    F = np.zeros((2 * r2 + 1, cap_sq + 1))
    np.add.at(F, (P, S), 1.0)
    np1, ns1 = F.shape
    fp, fs = 2 * np1 - 1, 2 * ns1 - 1
    FF = np.fft.rfft2(F, s=(fp, fs))
    G = np.fft.irfft2(FF * FF, s=(fp, fs))
    Gm = G[r2: 3 * r2 + 1, : cap_sq + 1]
    Gc = np.cumsum(Gm, axis=1)
    total = 0.0
    for s2 in range(cap_sq + 1):
        col = F[:, s2]
        nz = np.nonzero(col)[0]
        if len(nz):
            total += float((col[nz] * Gc[nz, cap_sq - s2]).sum())
    return int(round(total)) - 1


def plucker_sweep_count_4_2(height_max) -> int:
    """Number of rational planes in R^4 with height <= height_max.

    Counts primitive integer points on the Plucker quadric directly
    (Moebius inversion removes imprimitive multiples; each subspace has
    exactly two sign representatives).  Independent of the pair sweep.
    """
    hmax_sq = _height_cap_sq(height_max)
    mu = _mobius(max(1, math.isqrt(hmax_sq)))
    total = 0
    k = 1
    while k * k <= hmax_sq:
        if mu[k]:
            total += int(mu[k]) * _quadric_solutions_4_2(hmax_sq // (k * k))
        k += 1
    assert total % 2 == 0
    return total // 2


# ---------------------------------------------------------------------------
# record scans against a real target
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ApproximationRecord:
    subspace_key: str
    height: object     # mpf
    psi_j: object      # mpf
    phi: object        # mpf
    j: int


@dataclass
class ScanResult:
    records: list[ApproximationRecord]
    j: int
    truncated: bool = False
    rational_target: bool = False
    scanned: int = 0


@dataclass(frozen=True)
class ExponentEstimate:
    beta_hat: float
    records: tuple[ApproximationRecord, ...]
    fit_residual: float


def _laplace_eps(n: int, e: int) -> np.ndarray:
    return np.array([laplace_sign(s) for s in subsets(n, e)], dtype=np.int64)


def target_plucker(a: RealSubspace):
    """Unit Plucker coordinate vector of a real subspace (mp floats)."""
    with mp.workprec(a.precision_bits):
        rows = a.basis
        coords = []
        for sub in subsets(a.n, a.dim):
            m = mp.matrix(a.dim, a.dim)
            for ii, i in enumerate(sub):
                for jj in range(a.dim):
                    m[ii, jj] = rows[jj][i]
            coords.append(mp.det(m))
        nrm = mp.sqrt(mp.fsum(c * c for c in coords))
        return [c / nrm for c in coords]


def hodge_pairing_floats(a: RealSubspace, etas: np.ndarray) -> np.ndarray:
    """|<a, *eta>| per row: the numerator of phi(A, B) * H(B) for d + e = n.

    The complement of the i-th d-subset is the (N-1-i)-th e-subset in lex
    order, so the Hodge pairing is a sign-twisted reversed dot product.
    """
    apl = np.array([float(x) for x in target_plucker(a)])
    eps = _laplace_eps(a.n, a.dim).astype(np.float64)
    pairing = (etas[:, ::-1].astype(np.float64) * eps[None, :]) @ apl
    return np.abs(pairing)


def _psi12_pairing(c: np.ndarray, s: np.ndarray):
    """Both principal-angle sines of plane pairs in R^4 from the two
    Plucker pairings |<a,b>| = cos t1 cos t2 and |<a,*b>| = sin t1 sin t2."""
    cm = np.clip(c + s, -1.0, 1.0)
    cp = np.clip(c - s, -1.0, 1.0)
    tm = np.arccos(cm)   # t2 - t1
    tp = np.arccos(cp)   # t1 + t2
    psi2 = np.sin((tp + tm) / 2)
    psi1 = np.divide(s, psi2, out=np.sin((tp - tm) / 2), where=psi2 > 1e-100)
    return psi1, psi2


def _refine_psi(a: RealSubspace, coords: tuple[int, ...], n, e, j, precision_bits):
    b = from_plucker(PluckerVec(n, e, coords))
    rv = real_view(b, precision_bits)
    prof = canonical_angles(a, rv, precision_bits=precision_bits)
    return prof.sines[j - 1], prof.phi, prof.err


_SCREEN_MARGIN = 1e-6
_GENERIC_LIMIT = 500_000


def _float_psi_generic(a: RealSubspace, enum: Enumeration, j: int) -> np.ndarray:
    """Batched float64 screen of psi_j for every enumerated subspace."""
    n, e = enum.n, enum.e
    d = a.dim
    t = min(d, e)
    etas = enum.pluckers
    count = len(etas)
    if count == 0:
        return np.zeros(0)
    X = np.array([[float(x) for x in row] for row in a.basis])  # d x n
    if e == 1:
        # lines: one angle; plain matrix products, no batched SVD needed
        Y = etas.astype(np.float64)
        Y /= np.linalg.norm(Y, axis=1)[:, None]
        G = Y @ X.T                      # (count, d)
        cosv = np.linalg.norm(G, axis=1)
        S = Y - G @ X
        sines = np.linalg.norm(S, axis=1)
        return np.where(cosv * cosv >= 0.5, sines,
                        np.sqrt(np.clip(1 - np.clip(cosv, 0, 1) ** 2, 0, 1)))
    if count > _GENERIC_LIMIT:
        raise ValueError("scan too large for the generic path (%d subspaces)" % count)
    # bases from the annihilator kernel x -> x wedge eta, batched
    idx = {s: i for i, s in enumerate(subsets(n, e))}
    rows_ids, col_ids, signs, srcs = [], [], [], []
    for rme, tsub in enumerate(subsets(n, e + 1)):
        for pos, k in enumerate(tsub):
            rest = tuple(x for x in tsub if x != k)
            rows_ids.append(rme)
            col_ids.append(k)
            signs.append((-1) ** pos)
            srcs.append(idx[rest])
    R = len(subsets(n, e + 1))
    A = np.zeros((count, R, n))
    A[:, rows_ids, col_ids] = np.array(signs, dtype=np.float64) * etas[:, srcs]
    _, sv, Vh = np.linalg.svd(A)
    Y = Vh[:, n - e:, :]  # orthonormal kernel bases, (count, e, n)
    G = Y @ X.T  # (count, e, d)
    cosv = np.linalg.svd(G, compute_uv=False)  # descending, t values
    S = Y - G @ X  # component of B off A
    sines_all = np.sort(np.linalg.svd(S, compute_uv=False), axis=1)
    sines = sines_all[:, :t]
    cosv = np.clip(cosv[:, :t], 0, 1)
    alt = np.sqrt(np.clip(1 - cosv * cosv, 0, 1))
    psi = np.where(cosv * cosv >= 0.5, sines, alt)
    psi = np.sort(psi, axis=1)
    return psi[:, j - 1]


def _float_psi_screen(a: RealSubspace, enum: Enumeration, j: int) -> np.ndarray:
    if enum.n == 4 and a.dim == 2 and enum.e == 2 and j in (1, 2):
        etas = enum.pluckers.astype(np.float64)
        norms = np.sqrt((etas * etas).sum(1))
        bhat = etas / norms[:, None]
        apl = np.array([float(x) for x in target_plucker(a)])
        eps = _laplace_eps(4, 2).astype(np.float64)
        c = np.abs(bhat @ apl)
        s = np.abs((bhat[:, ::-1] * eps[None, :]) @ apl)
        psi1, psi2 = _psi12_pairing(c, s)
        return psi1 if j == 1 else psi2
    return _float_psi_generic(a, enum, j)


def scan_target(a: RealSubspace, e: int, j: int, height_max, *,
                enumeration: Enumeration | None = None,
                precision_bits: int | None = None,
                cache_path: str | None = None,
                workers: int = 1) -> ScanResult:
    """Strictly-improving record sequence of psi_j(A, B) over heights <= height_max.

    B enters the sequence iff its psi_j beats every subspace of lower or
    equal height (ties at equal height: smaller psi_j wins, exact ties keep
    the lexicographically smaller key).  A float64 screen proposes record
    candidates; each candidate is then recomputed at full precision, so the
    chain itself is decided at `precision_bits`.
    """
    if j < 1 or j > min(a.dim, e):
        raise ValueError("need 1 <= j <= min(dim A, e)")
    prec = precision_bits if precision_bits is not None else a.precision_bits
    if enumeration is None:
        enumeration = enumerate_subspaces(a.n, e, height_max,
                                          cache_path=cache_path, workers=workers)
    if enumeration.n != a.n or enumeration.e != e:
        raise ValueError("enumeration is for (n=%d, e=%d), target needs (n=%d, e=%d)"
                         % (enumeration.n, enumeration.e, a.n, e))
    enum = enumeration.restrict(height_max)
    count = len(enum)
    result = ScanResult(records=[], j=j, truncated=enum.truncated, scanned=count)
    if count == 0:
        return result

    psi_f = _float_psi_screen(a, enum, j)
    h2 = enum.heights_sq
    # prefix minimum over strictly smaller heights
    boundaries = np.searchsorted(h2, np.unique(h2), side="left")
    prefix_min = np.full(count, np.inf)
    best = np.inf
    starts = list(boundaries) + [count]
    for gi in range(len(boundaries)):
        lo, hi = starts[gi], starts[gi + 1]
        prefix_min[lo:hi] = best
        gmin = psi_f[lo:hi].min()
        best = min(best, gmin)
    cand = psi_f <= prefix_min * (1 + _SCREEN_MARGIN) + 1e-300
    cand_idx = np.nonzero(cand)[0]

    zero_tol = mp.mpf(2) ** (-(prec // 2))
    running = None
    idx_list = [int(i) for i in cand_idx]
    with mp.workprec(prec):
        pos = 0
        while pos < len(idx_list):
            hh = int(h2[idx_list[pos]])
            group = []
            while pos < len(idx_list) and int(h2[idx_list[pos]]) == hh:
                group.append(idx_list[pos])
                pos += 1
            best = None  # (psi, coords, record); ties keep the lex-smaller key
            for i in group:
                coords = enum.coords_at(i)
                psi, ph, _ = _refine_psi(a, coords, enum.n, enum.e, j, prec)
                if best is None or psi < best[0] or (psi == best[0] and coords < best[1]):
                    rec = ApproximationRecord(enum.key_at(i), mp.sqrt(mp.mpf(hh)), psi, ph, j)
                    best = (psi, coords, rec)
            if best is not None and (running is None or best[0] < running):
                result.records.append(best[2])
                running = best[0]
                if best[0] < zero_tol:
                    result.rational_target = True
                    break
    if result.rational_target and result.records:
        last = result.records[-1]
        result.records[-1] = ApproximationRecord(last.subspace_key, last.height,
                                                 mp.mpf(0), mp.mpf(0), j)
    return result


def estimate_exponent(records: Sequence[ApproximationRecord]) -> ExponentEstimate:
    """Least-squares slope of log psi_j against log height; beta_hat = -slope."""
    pts = [(float(r.height), float(r.psi_j)) for r in records if float(r.psi_j) > 0]
    heights = sorted({h for h, _ in pts})
    if len(heights) < 2:
        raise ValueError("need at least 2 records with distinct positive heights")
    xs = np.log([h for h, _ in pts])
    ys = np.log([p for _, p in pts])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    return ExponentEstimate(float(-slope), tuple(records),
                            float(np.sqrt(np.mean(resid ** 2))))
