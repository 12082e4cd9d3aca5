"""Exact samplers for the null G(n,m) model and the planted-star model.

Everything is degree-oriented: experiments at m ~ 10^7 never materialize
adjacency, only endpoint counters.  Vertex pairs are encoded as
colexicographic integer codes, code = j(j-1)/2 + i for i < j, and edge
sets are sampled as uniform distinct-code subsets via the
draw/sort/dedup/top-up loop (exactly uniform: the accepted codes are the
first distinct values of an i.i.d. uniform stream).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numba
import numpy as np

from . import hypergeom
from .hypergeom import HypergeomParams

_INT32_SPACE = 2**31 - 1
# below this pair-space size an ordered sample is taken as a permutation prefix
_PERMUTATION_MAX = 4_000_000


def encode_pair(i: int, j: int) -> int:
    """Colexicographic code of the unordered pair {i, j}."""
    if i == j:
        raise ValueError("self-loops have no pair code")
    if i > j:
        i, j = j, i
    return j * (j - 1) // 2 + i


def decode_pair(code: int) -> tuple[int, int]:
    """Inverse of encode_pair, bit-exact via integer square root."""
    if code < 0:
        raise ValueError("pair codes are nonnegative")
    j = (1 + math.isqrt(8 * code + 1)) // 2
    i = code - j * (j - 1) // 2
    return i, j


@numba.njit(cache=True, nogil=True)
def _degree_counts(codes, n):
    counts = np.zeros(n, dtype=np.int64)
    for idx in range(codes.size):
        c = codes[idx]
        j = np.int64((np.sqrt(8.0 * c + 1.0) + 1.0) * 0.5)
        lo = j * (j - 1) // 2
        if lo > c:
            j -= 1
            lo = j * (j - 1) // 2
        elif (j + 1) * j // 2 <= c:
            j += 1
            lo = j * (j - 1) // 2
        counts[c - lo] += 1
        counts[j] += 1
    return counts


@numba.njit(cache=True, nogil=True)
def _decode_endpoints(codes):
    u = np.empty(codes.size, dtype=np.int64)
    v = np.empty(codes.size, dtype=np.int64)
    for idx in range(codes.size):
        c = codes[idx]
        j = np.int64((np.sqrt(8.0 * c + 1.0) + 1.0) * 0.5)
        lo = j * (j - 1) // 2
        if lo > c:
            j -= 1
            lo = j * (j - 1) // 2
        elif (j + 1) * j // 2 <= c:
            j += 1
            lo = j * (j - 1) // 2
        u[idx] = c - lo
        v[idx] = j
    return u, v


def m_from_gamma(n: int, k: int, gamma: float) -> tuple[int, bool]:
    """Edge count at window coordinate gamma:
    round((k^2 n / (4 ln n)) (1 + gamma / sqrt(ln n))), clamped to [k, N].

    Returns (m, clamped).
    """
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    ln = math.log(n)
    raw = (k * k * n / (4.0 * ln)) * (1.0 + gamma / math.sqrt(ln))
    return _clamp_m(raw, n, k)


def m_from_c(n: int, k: int, c: float) -> tuple[int, bool]:
    """Edge count at coarse window coordinate c: round(c k^2 n / ln n),
    clamped to [k, N].  Returns (m, clamped)."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    raw = c * k * k * n / math.log(n)
    return _clamp_m(raw, n, k)


def _clamp_m(raw: float, n: int, k: int) -> tuple[int, bool]:
    N = n * (n - 1) // 2
    m = int(round(raw))
    if m < k:
        return k, True
    if m > N:
        return N, True
    return m, False


def gamma_from_m(n: int, k: int, m: int) -> float:
    """Window coordinate of an explicit edge count:
    gamma = (4 m ln n / (k^2 n) - 1) sqrt(ln n)."""
    ln = math.log(n)
    return (4.0 * m * ln / (k * k * n) - 1.0) * math.sqrt(ln)


@dataclass(frozen=True)
class ModelParams:
    """Instance of the detection problem: n vertices, m edges, star size k,
    threshold exponent alpha.  gamma/c record the window coordinate when the
    instance was built from one; clamped records window-arithmetic clamping."""

    n: int
    m: int
    k: int = 1
    alpha: float = 2.0
    gamma: float | None = None
    c: float | None = None
    clamped: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not 1 <= self.k <= self.n - 1:
            raise ValueError(f"k must be in [1, {self.n - 1}], got {self.k}")
        if not self.k <= self.m <= self.N:
            raise ValueError(f"m must be in [{self.k}, {self.N}], got {self.m}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def N(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def p(self) -> float:
        return self.m / self.N

    @classmethod
    def from_gamma(cls, n: int, k: int, gamma: float, alpha: float = 2.0) -> "ModelParams":
        m, clamped = m_from_gamma(n, k, gamma)
        return cls(n=n, m=m, k=k, alpha=alpha, gamma=gamma, clamped=clamped)

    @classmethod
    def from_c(cls, n: int, k: int, c: float, alpha: float = 2.0) -> "ModelParams":
        m, clamped = m_from_c(n, k, c)
        return cls(n=n, m=m, k=k, alpha=alpha, c=c, clamped=clamped)


@dataclass(frozen=True, eq=False)
class DegreeVector:
    """Length-n vertex degrees of an m-edge graph (the sufficient statistic
    for every test here).  Invariants: sum = 2m, entries in [0, n-1]."""

    degrees: np.ndarray
    m: int

    def __post_init__(self):
        deg = np.asarray(self.degrees, dtype=np.int64)
        object.__setattr__(self, "degrees", deg)
        if deg.ndim != 1 or deg.size < 2:
            raise ValueError("degrees must be a 1-d sequence of length >= 2")
        if int(deg.sum()) != 2 * self.m:
            raise ValueError(
                f"degree sum {int(deg.sum())} != 2m = {2 * self.m}"
            )
        if deg.min() < 0 or deg.max() > deg.size - 1:
            raise ValueError("degrees must lie in [0, n-1]")

    @property
    def n(self) -> int:
        return self.degrees.size


@dataclass(frozen=True, eq=False)
class PlantedSample:
    """One draw from the planted model: degrees, the hub, the leaf set,
    and (from the coupled sampler only) the matched null degrees."""

    degrees: DegreeVector
    hub: int
    leaves: np.ndarray
    coupled_null: DegreeVector | None = None

    def __post_init__(self):
        leaves = np.sort(np.asarray(self.leaves, dtype=np.int64))
        object.__setattr__(self, "leaves", leaves)
        k = leaves.size
        d1 = self.degrees.degrees
        if np.any(leaves == self.hub):
            raise ValueError("hub cannot be one of its own leaves")
        if np.unique(leaves).size != k:
            raise ValueError("leaves must be distinct")
        if d1[self.hub] < k:
            raise ValueError("hub degree below star size")
        if self.coupled_null is not None:
            d0 = self.coupled_null.degrees
            bound = d0.copy()
            bound[leaves] += 1
            bound[self.hub] = d0[self.hub] + k
            if np.any(d1 > bound):
                raise ValueError("coupling domination violated")

    @property
    def k(self) -> int:
        return self.leaves.size


def _code_dtype(space: int):
    return np.int32 if space <= _INT32_SPACE else np.int64


def _filter_members(candidates: np.ndarray, sorted_pool: np.ndarray) -> np.ndarray:
    """Drop candidates present in sorted_pool (order preserved)."""
    if sorted_pool.size == 0 or candidates.size == 0:
        return candidates
    idx = np.searchsorted(sorted_pool, candidates)
    idx[idx == sorted_pool.size] = sorted_pool.size - 1
    return candidates[sorted_pool[idx] != candidates]


def _drop_members_sorted(sorted_candidates: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Drop the (few) members from a sorted candidate array; O(|members| log)."""
    if members.size == 0 or sorted_candidates.size == 0:
        return sorted_candidates
    idx = np.searchsorted(sorted_candidates, members)
    idx = idx[idx < sorted_candidates.size]
    hits = idx[sorted_candidates[idx] == members[: idx.size]]
    if hits.size == 0:
        return sorted_candidates
    return np.delete(sorted_candidates, hits)


def _distinct_codes(
    count: int,
    space: int,
    rng: np.random.Generator,
    exclude: np.ndarray | None = None,
) -> np.ndarray:
    """Uniform random `count`-subset of [0, space) \\ exclude, as an
    (unsorted) array of distinct codes.

    Draws i.i.d. uniform codes, sorts, removes duplicates and excluded
    codes, and tops up until exactly `count` distinct codes remain.  Each
    round keeps only the shortfall, so the accepted codes are exactly the
    first admissible distinct values of the i.i.d. stream.
    """
    n_admissible = space - (0 if exclude is None else exclude.size)
    if count > n_admissible:
        raise ValueError(f"cannot draw {count} distinct codes from {n_admissible}")
    dtype = _code_dtype(space)
    if count == 0:
        return np.empty(0, dtype=dtype)
    excl = None
    if exclude is not None and exclude.size:
        excl = np.sort(exclude.astype(dtype))
    chunks: list[np.ndarray] = []
    need = count
    while need > 0:
        batch = rng.integers(0, space, size=need, dtype=dtype)
        batch = np.unique(batch)
        if excl is not None:
            batch = _drop_members_sorted(batch, excl)
        for prior in chunks:
            batch = _filter_members(batch, prior)
        if batch.size:
            chunks.append(batch)
            need -= batch.size
    if len(chunks) == 1:
        return chunks[0]
    return np.concatenate(chunks)


def _ordered_distinct_codes(
    count: int, space: int, rng: np.random.Generator
) -> np.ndarray:
    """First `count` values of a uniform random permutation of [0, space).

    Small spaces use an explicit permutation prefix; large spaces stream
    i.i.d. codes and keep first occurrences, which has the same law.
    """
    if count > space:
        raise ValueError(f"cannot order {count} distinct codes from {space}")
    if count == 0:
        return np.empty(0, dtype=np.int64)
    if space <= _PERMUTATION_MAX:
        return rng.permutation(space)[:count].astype(np.int64)
    accepted: list[np.ndarray] = []
    seen = np.empty(0, dtype=np.int64)
    need = count
    while need > 0:
        batch = rng.integers(0, space, size=need, dtype=np.int64)
        uniq, first_idx = np.unique(batch, return_index=True)
        batch = batch[np.sort(first_idx)]
        keep = _filter_members(batch, seen)[:need]
        if keep.size:
            accepted.append(keep)
            seen = np.sort(np.concatenate([seen, keep]))
            need -= keep.size
    return np.concatenate(accepted)


def sample_null_edges(params: ModelParams, rng: np.random.Generator) -> np.ndarray:
    """Uniform m-edge graph as an (m, 2) array of endpoint pairs u < v."""
    codes = _distinct_codes(params.m, params.N, rng)
    u, v = _decode_endpoints(codes.astype(np.int64))
    return np.column_stack([u, v])


def sample_null_degrees(params: ModelParams, rng: np.random.Generator) -> DegreeVector:
    """Degree vector of a uniform m-edge graph, without adjacency."""
    codes = _distinct_codes(params.m, params.N, rng)
    return DegreeVector(_degree_counts(codes, params.n), params.m)


def _sample_star(params: ModelParams, rng: np.random.Generator):
    hub = int(rng.integers(params.n))
    raw = _distinct_codes(params.k, params.n - 1, rng).astype(np.int64)
    leaves = np.where(raw < hub, raw, raw + 1)
    star_codes = np.sort(
        np.array([encode_pair(hub, int(leaf)) for leaf in leaves], dtype=np.int64)
    )
    return hub, leaves, star_codes


def _sample_planted_with_codes(params: ModelParams, rng: np.random.Generator):
    hub, leaves, star_codes = _sample_star(params, rng)
    extra = _distinct_codes(params.m - params.k, params.N, rng, exclude=star_codes)
    counts = _degree_counts(extra, params.n)
    counts[hub] += params.k
    counts[leaves] += 1
    deg = DegreeVector(counts, params.m)
    sample = PlantedSample(degrees=deg, hub=hub, leaves=leaves)
    return sample, star_codes, extra.astype(np.int64)


def sample_planted(params: ModelParams, rng: np.random.Generator) -> PlantedSample:
    """One draw from the planted model: a uniform hub with k uniform
    incident edges, plus m-k uniform edges among the other N-k pairs."""
    return _sample_planted_with_codes(params, rng)[0]


def _sample_coupled_with_codes(params: ModelParams, rng: np.random.Generator):
    hub, leaves, star_codes = _sample_star(params, rng)
    prefix = _ordered_distinct_codes(params.m, params.N, rng)
    null_deg = DegreeVector(_degree_counts(prefix, params.n), params.m)
    non_star = _filter_members(prefix, star_codes)[: params.m - params.k]
    codes = np.concatenate([star_codes, non_star])
    deg = DegreeVector(_degree_counts(codes, params.n), params.m)
    sample = PlantedSample(
        degrees=deg, hub=hub, leaves=leaves, coupled_null=null_deg
    )
    return sample, codes, prefix


def sample_coupled(params: ModelParams, rng: np.random.Generator) -> PlantedSample:
    """Planted and null samples driven by one permutation of all pair codes.

    The null graph takes the first m codes of the permutation; the planted
    graph takes the star plus the first m-k non-star codes (all of which
    occur within the first m positions, since at most k of those are star
    codes).  Domination of planted degrees by null degrees plus leaf
    indicators holds deterministically.
    """
    return _sample_coupled_with_codes(params, rng)[0]


def sample_center_degree(params: ModelParams, rng: np.random.Generator) -> int:
    """Degree of the planted hub alone: k plus a hypergeometric count of
    extra edges hitting the hub."""
    extra = hypergeom.sample(
        HypergeomParams(
            population=params.N - params.k,
            successes=params.n - 1 - params.k,
            draws=params.m - params.k,
        ),
        rng,
    )
    return params.k + extra


def write_edges_csv(edges: np.ndarray, fileobj) -> None:
    """Two-column CSV with header ``u,v`` (0-based endpoints)."""
    writer = csv.writer(fileobj)
    writer.writerow(["u", "v"])
    for u, v in np.asarray(edges):
        writer.writerow([int(u), int(v)])


def read_edges_csv(fileobj) -> np.ndarray:
    reader = csv.reader(fileobj)
    header = next(reader)
    if header != ["u", "v"]:
        raise ValueError(f'expected header "u,v", got {header!r}')
    rows = [(int(r[0]), int(r[1])) for r in reader if r]
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


def write_degrees_csv(degrees, fileobj) -> None:
    """Single-column CSV with header ``degree``."""
    if isinstance(degrees, DegreeVector):
        degrees = degrees.degrees
    writer = csv.writer(fileobj)
    writer.writerow(["degree"])
    for d in np.asarray(degrees):
        writer.writerow([int(d)])


def read_degrees_csv(fileobj) -> np.ndarray:
    reader = csv.reader(fileobj)
    header = next(reader)
    if header != ["degree"]:
        raise ValueError(f'expected header "degree", got {header!r}')
    return np.array([int(r[0]) for r in reader if r], dtype=np.int64)
