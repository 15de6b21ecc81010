"""Gram index layout and the compiled catalog of moment-consistency equalities."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..model import ModelError, RegionCovering

EMPTY = 0


@dataclass(frozen=True, eq=False)
class GramIndex:
    """Maps the empty set, vertices and covered pairs to rows of the Gram matrix.

    Row 0 is the empty set, rows 1..n are vertices, and the covered pairs follow
    in lexicographic order.
    """

    num_vertices: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "_pair_pos", {p: k for k, p in enumerate(self.pairs)})

    @classmethod
    def from_covering(cls, cov: RegionCovering, num_vertices: int | None = None) -> "GramIndex":
        n = num_vertices
        if n is None:
            n = 1 + max((max(r) for r in cov.regions), default=-1)
        return cls(int(n), tuple(cov.pairs()))

    @property
    def size(self) -> int:
        return 1 + self.num_vertices + len(self.pairs)

    def vertex(self, i: int) -> int:
        if not 0 <= i < self.num_vertices:
            raise KeyError(f"vertex {i} out of range")
        return 1 + i

    def pair(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return 1 + self.num_vertices + self._pair_pos[(i, j)]

    def has_pair(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self._pair_pos

    def subset(self, s: tuple[int, ...]) -> int:
        if len(s) == 0:
            return EMPTY
        if len(s) == 1:
            return self.vertex(s[0])
        if len(s) == 2:
            return self.pair(*s)
        raise KeyError(s)

    def is_vertex(self, s: int) -> bool:
        return 1 <= s <= self.num_vertices

    def label(self, s: int) -> tuple[int, ...]:
        """Vertex subset represented by Gram row ``s``."""
        if s == EMPTY:
            return ()
        if s <= self.num_vertices:
            return (s - 1,)
        return self.pairs[s - 1 - self.num_vertices]

    def pair_rows(self) -> np.ndarray:
        return np.arange(1 + self.num_vertices, self.size)


@dataclass(frozen=True, eq=False)
class ConstraintCatalog:
    """Equalities <s_a, s_b> = <s_c, s_d>, stored as rows (a, b, c, d).

    The left pair is the canonical (lexicographically least) Gram pair for the
    moment; the right pair is an alternative representation of it. The
    per-variable incidence is stored in CSR form for the sweep kernels: for
    each variable, the equalities it appears in, its partner in that inner
    product, the opposite pair, and +1/-1 for left/right side.
    """

    index: GramIndex
    equalities: np.ndarray  # (K, 4) int64
    inc_ptr: np.ndarray
    inc_eq: np.ndarray
    inc_partner: np.ndarray
    inc_t: np.ndarray
    inc_p: np.ndarray
    inc_sign: np.ndarray

    def __len__(self):
        return len(self.equalities)

    @property
    def num_vars(self) -> int:
        return self.index.size

    def involving(self, s: int) -> np.ndarray:
        return self.inc_eq[self.inc_ptr[s]:self.inc_ptr[s + 1]]

    def zero_multipliers(self) -> np.ndarray:
        return np.zeros(len(self.equalities))


def _region_equalities(region: tuple[int, ...], index: GramIndex) -> set[tuple[int, int, int, int]]:
    subsets = [()] + [(v,) for v in region] + list(combinations(region, 2))
    moments: dict[frozenset, list[tuple[int, int]]] = {}
    for S, T in combinations(subsets, 2):
        key = frozenset(S).symmetric_difference(T)
        a, b = index.subset(S), index.subset(T)
        moments.setdefault(key, []).append((min(a, b), max(a, b)))
    out = set()
    for reps in moments.values():
        reps = sorted(set(reps))
        canon = reps[0]
        for alt in reps[1:]:
            out.add(canon + alt)
    return out


def build_incidence(equalities: np.ndarray, num_vars: int):
    K = len(equalities)
    eq = np.asarray(equalities, dtype=np.int64).reshape(K, 4)
    var = eq.reshape(-1)
    pos = np.tile(np.arange(4), K)
    eq_id = np.repeat(np.arange(K), 4)
    partner = eq[eq_id, pos ^ 1]
    other = np.where(pos[:, None] < 2, eq[eq_id][:, 2:], eq[eq_id][:, :2])
    sign = np.where(pos < 2, 1.0, -1.0)
    order = np.lexsort((eq_id, var))
    counts = np.bincount(var, minlength=num_vars)
    ptr = np.zeros(num_vars + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return (
        ptr,
        eq_id[order].astype(np.int64),
        partner[order].astype(np.int64),
        other[order, 0].astype(np.int64),
        other[order, 1].astype(np.int64),
        sign[order],
    )


def compile_constraints(cov: RegionCovering, num_vertices: int | None = None,
                        size_cap: int = 4) -> ConstraintCatalog:
    """Emit every degree-4 moment-consistency equality inside each region.

    Sphere constraints are not listed; they are enforced by normalisation.
    Equalities shared by overlapping regions appear once.
    """
    index = GramIndex.from_covering(cov, num_vertices)
    rows: set[tuple[int, int, int, int]] = set()
    for region in cov.regions:
        if len(region) > size_cap:
            raise ModelError(f"region {region} exceeds size cap {size_cap}")
        if region and region[-1] >= index.num_vertices:
            raise ModelError(f"region {region} has a vertex outside the model")
        rows |= _region_equalities(region, index)
    eqs = np.array(sorted(rows), dtype=np.int64).reshape(-1, 4)
    return ConstraintCatalog(index, eqs, *build_incidence(eqs, index.size))
