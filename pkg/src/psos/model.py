"""Binary pairwise graphical models, region coverings and instance generators.

Vertices are indexed from 0 in row-major order on grids. Assignments are plain
int8 arrays with entries in {+1, -1}.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    """Invalid model, covering or image construction."""


class DimensionError(ModelError):
    pass


class StructureError(ModelError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GraphModel:
    """Pairwise binary model U(x) = sum_e w_e x_i x_j + sum_i h_i x_i."""

    num_vertices: int
    edges: np.ndarray  # (m, 2) int64, i < j
    edge_weights: np.ndarray  # (m,) float64
    vertex_weights: np.ndarray  # (n,) float64

    def __post_init__(self):
        n = int(self.num_vertices)
        if n < 1:
            raise ModelError("num_vertices must be positive")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        w = np.asarray(self.edge_weights, dtype=np.float64).reshape(-1)
        h = np.asarray(self.vertex_weights, dtype=np.float64).reshape(-1)
        if len(w) != len(edges):
            raise DimensionError(f"{len(edges)} edges but {len(w)} edge weights")
        if len(h) != n:
            raise DimensionError(f"{n} vertices but {len(h)} vertex weights")
        if len(edges):
            if edges.min() < 0 or edges.max() >= n:
                raise ModelError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ModelError("self-loop edge")
            edges = np.sort(edges, axis=1)
            keys = edges[:, 0] * n + edges[:, 1]
            if len(np.unique(keys)) != len(keys):
                raise ModelError("duplicate edge")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(h))):
            raise ModelError("non-finite weight")
        object.__setattr__(self, "num_vertices", n)
        object.__setattr__(self, "edges", _readonly(edges.copy()))
        object.__setattr__(self, "edge_weights", _readonly(w.copy()))
        object.__setattr__(self, "vertex_weights", _readonly(h.copy()))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_dict(self) -> dict[tuple[int, int], float]:
        return {(int(i), int(j)): float(w) for (i, j), w in zip(self.edges, self.edge_weights)}

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_vertices)]
        for i, j in self.edges:
            adj[i].append(int(j))
            adj[j].append(int(i))
        return adj

    def __eq__(self, other):
        if not isinstance(other, GraphModel):
            return NotImplemented
        return (
            self.num_vertices == other.num_vertices
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.edge_weights, other.edge_weights)
            and np.array_equal(self.vertex_weights, other.vertex_weights)
        )

    __hash__ = None


def as_assignment(x, n: int | None = None) -> np.ndarray:
    """Validate and return ``x`` as an int8 vector of +-1 entries."""
    a = np.asarray(x)
    if a.ndim != 1:
        raise DimensionError("assignment must be one-dimensional")
    if n is not None and len(a) != n:
        raise DimensionError(f"assignment has length {len(a)}, model has {n} vertices")
    if not np.all((a == 1) | (a == -1)):
        raise ModelError("assignment entries must be +1 or -1")
    return a.astype(np.int8)


def objective_value(model: GraphModel, x) -> float:
    """U(x); the sum is correctly rounded so it does not depend on term order."""
    x = as_assignment(x, model.num_vertices).astype(np.float64)
    if model.num_edges:
        eterms = model.edge_weights * x[model.edges[:, 0]] * x[model.edges[:, 1]]
    else:
        eterms = np.empty(0)
    vterms = model.vertex_weights * x
    return math.fsum(np.concatenate([eterms, vterms]).tolist())


# ---------------------------------------------------------------- grids

def _dims(side) -> tuple[int, int]:
    if isinstance(side, (tuple, list)):
        rows, cols = (int(v) for v in side)
    else:
        rows = cols = int(side)
    if rows < 1 or cols < 1:
        raise ModelError("grid dimensions must be positive")
    return rows, cols


def grid_edges(side) -> np.ndarray:
    """4-connected grid edges in canonical (lexicographic) order."""
    rows, cols = _dims(side)
    out = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                out.append((v, v + 1))
            if r + 1 < rows:
                out.append((v, v + cols))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def _plaquettes(side) -> list[tuple[int, int, int, int]]:
    """(top-left, top-right, bottom-left, bottom-right) for every unit square."""
    rows, cols = _dims(side)
    out = []
    for r in range(rows - 1):
        for c in range(cols - 1):
            v = r * cols + c
            out.append((v, v + 1, v + cols, v + cols + 1))
    return out


def grid_model(side, edge_weights, vertex_weights) -> GraphModel:
    rows, cols = _dims(side)
    edges = grid_edges((rows, cols))
    w = np.asarray(edge_weights, dtype=np.float64)
    h = np.asarray(vertex_weights, dtype=np.float64)
    if w.shape != (len(edges),):
        raise DimensionError(f"grid needs {len(edges)} edge weights, got shape {w.shape}")
    if h.shape != (rows * cols,):
        raise DimensionError(f"grid needs {rows * cols} vertex weights, got shape {h.shape}")
    return GraphModel(rows * cols, edges, w, h)


def _check_grid(model: GraphModel, side) -> tuple[int, int]:
    rows, cols = _dims(side)
    if model.num_vertices != rows * cols:
        raise StructureError(f"model has {model.num_vertices} vertices, not a {rows}x{cols} grid")
    ge = grid_edges((rows, cols))
    have = {tuple(e) for e in model.edges.tolist()}
    if have != {tuple(e) for e in ge.tolist()}:
        raise StructureError("model edges are not the grid edges")
    return rows, cols


def infer_grid_side(model: GraphModel) -> int:
    """Side of the square grid a model lives on (diagonals allowed)."""
    side = math.isqrt(model.num_vertices)
    if side * side != model.num_vertices:
        raise StructureError("vertex count is not a perfect square")
    for i, j in model.edges.tolist():
        (r1, c1), (r2, c2) = divmod(i, side), divmod(j, side)
        if (r2 - r1, c2 - c1) not in ((0, 1), (1, 0), (1, 1)):
            raise StructureError(f"edge ({i}, {j}) is neither a grid edge nor a diagonal")
    return side


def _diagonals(rows: int, cols: int) -> list[tuple[int, int]]:
    return [(a, d) for a, _, _, d in _plaquettes((rows, cols))]


def plain_grid(model: GraphModel, side) -> GraphModel:
    """Drop zero-weight diagonals from a grid model."""
    rows, cols = _dims(side)
    w = model.edge_dict()
    ge = [tuple(e) for e in grid_edges((rows, cols)).tolist()]
    extra = set(w) - set(ge)
    if not extra <= set(_diagonals(rows, cols)) or any(w[e] != 0.0 for e in extra):
        raise StructureError("model has weighted edges outside the 4-connected grid")
    if not all(e in w for e in ge):
        raise StructureError("model is missing grid edges")
    return grid_model((rows, cols), [w[e] for e in ge], model.vertex_weights)


def with_all_diagonals(model: GraphModel, side) -> GraphModel:
    """Grid model with every plaquette diagonal present (missing ones at weight 0)."""
    rows, cols = _dims(side)
    w = model.edge_dict()
    ge = [tuple(e) for e in grid_edges((rows, cols)).tolist()]
    diag = _diagonals(rows, cols)
    if not set(w) <= set(ge) | set(diag) or not all(e in w for e in ge):
        raise StructureError("model is not a grid with optional diagonals")
    missing = [e for e in diag if e not in w]
    if not missing:
        return model
    return GraphModel(model.num_vertices,
                      np.vstack([model.edges, np.array(missing, dtype=np.int64)]),
                      np.concatenate([model.edge_weights, np.zeros(len(missing))]),
                      model.vertex_weights)


def augment_with_diagonals(model: GraphModel, side) -> GraphModel:
    """Append one zero-weight diagonal (top-left to bottom-right) per plaquette."""
    rows, cols = _check_grid(model, side)
    diag = np.array([(a, d) for a, _, _, d in _plaquettes((rows, cols))], dtype=np.int64).reshape(-1, 2)
    return GraphModel(
        model.num_vertices,
        np.vstack([model.edges, diag]),
        np.concatenate([model.edge_weights, np.zeros(len(diag))]),
        model.vertex_weights,
    )


@dataclass(frozen=True)
class RegionCovering:
    regions: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        regs = tuple(tuple(sorted(int(v) for v in r)) for r in self.regions)
        for r in regs:
            if len(set(r)) != len(r):
                raise ModelError(f"region {r} repeats a vertex")
            if len(r) == 0:
                raise ModelError("empty region")
        object.__setattr__(self, "regions", regs)

    def __len__(self):
        return len(self.regions)

    def max_size(self) -> int:
        return max((len(r) for r in self.regions), default=0)

    def pairs(self) -> list[tuple[int, int]]:
        """Sorted list of vertex pairs contained in some region."""
        out = set()
        for r in self.regions:
            for a in range(len(r)):
                for b in range(a + 1, len(r)):
                    out.add((r[a], r[b]))
        return sorted(out)


def triangle_covering(side) -> RegionCovering:
    rows, cols = _dims(side)
    if min(rows, cols) < 2:
        raise ModelError("triangle covering needs side >= 2")
    regs = []
    for a, b, c, d in _plaquettes((rows, cols)):
        regs.append((a, b, d))
        regs.append((a, c, d))
    return RegionCovering(tuple(regs))


def plaquette_covering(side) -> RegionCovering:
    rows, cols = _dims(side)
    if min(rows, cols) < 2:
        raise ModelError("plaquette covering needs side >= 2")
    return RegionCovering(tuple(_plaquettes((rows, cols))))


def vertex_covering(n: int) -> RegionCovering:
    """Singleton regions; the degree-2 (sphere constraints only) configuration."""
    return RegionCovering(tuple((i,) for i in range(n)))


@dataclass(frozen=True)
class CoveringReport:
    uncovered_vertices: tuple[int, ...]
    uncovered_edges: tuple[tuple[int, int], ...]

    @property
    def ok(self) -> bool:
        return not self.uncovered_vertices and not self.uncovered_edges

    def __bool__(self):
        return self.ok


def validate_covering(model: GraphModel, cov: RegionCovering) -> CoveringReport:
    seen = set()
    for r in cov.regions:
        seen.update(r)
    missing_v = tuple(i for i in range(model.num_vertices) if i not in seen)
    pairs = set(cov.pairs())
    missing_e = tuple((int(i), int(j)) for i, j in model.edges if (int(i), int(j)) not in pairs)
    return CoveringReport(missing_v, missing_e)


def apex_reduction(model: GraphModel) -> GraphModel:
    """Fold vertex weights into edges to an extra apex vertex (index n)."""
    n = model.num_vertices
    nz = np.flatnonzero(model.vertex_weights != 0)
    apex_edges = np.column_stack([nz, np.full(len(nz), n)]).astype(np.int64)
    return GraphModel(
        n + 1,
        np.vstack([model.edges, apex_edges]),
        np.concatenate([model.edge_weights, model.vertex_weights[nz]]),
        np.zeros(n + 1),
    )


# ---------------------------------------------------------------- generators

class SpinGlassDistribution(enum.IntEnum):
    """Edge / vertex weight laws for the spin-glass benchmark."""

    UNIFORM_PM1 = 1  # w ~ U{+-1}, h ~ U{+-1}
    UNIFORM_HALF_FIELD = 2  # w ~ U{+-1}, h ~ U{+-1/2}
    GAUSS_WEAK_FIELD = 3  # w ~ N(0,1), h ~ N(0, 0.1^2)
    GAUSS_UNIT_FIELD = 4  # w ~ N(0,1), h ~ N(0, 1)


def _signs(rng: np.random.Generator, size: int) -> np.ndarray:
    return np.where(rng.integers(0, 2, size=size) == 1, 1.0, -1.0)


def gen_spinglass(side, dist, seed: int) -> GraphModel:
    rows, cols = _dims(side)
    if min(rows, cols) < 2:
        raise ModelError("spin glass grid needs side >= 2")
    dist = SpinGlassDistribution(int(dist))
    rng = np.random.default_rng(seed)
    m = len(grid_edges((rows, cols)))
    n = rows * cols
    if dist in (SpinGlassDistribution.UNIFORM_PM1, SpinGlassDistribution.UNIFORM_HALF_FIELD):
        w = _signs(rng, m)
        h = _signs(rng, n)
        if dist == SpinGlassDistribution.UNIFORM_HALF_FIELD:
            h = 0.5 * h
    else:
        w = rng.standard_normal(m)
        scale = 0.1 if dist == SpinGlassDistribution.GAUSS_WEAK_FIELD else 1.0
        h = scale * rng.standard_normal(n)
    return grid_model((rows, cols), w, h)


@dataclass(frozen=True, eq=False)
class BinaryImage:
    width: int
    height: int
    pixels: np.ndarray = field(repr=False)  # row-major int8 +-1

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ModelError("image dimensions must be positive")
        px = as_assignment(np.asarray(self.pixels).reshape(-1))
        if len(px) != self.width * self.height:
            raise DimensionError("pixel count does not match width*height")
        object.__setattr__(self, "pixels", _readonly(px))

    @classmethod
    def from_array(cls, arr) -> "BinaryImage":
        arr = np.asarray(arr)
        return cls(arr.shape[1], arr.shape[0], arr.reshape(-1))

    def to_array(self) -> np.ndarray:
        return self.pixels.reshape(self.height, self.width)

    def __eq__(self, other):
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and np.array_equal(
            self.pixels, other.pixels
        )

    __hash__ = None


def gen_denoise_model(y: BinaryImage, theta0: float) -> GraphModel:
    """Ferromagnetic grid with unit couplings and field theta0 * y."""
    shape = (y.height, y.width)
    m = len(grid_edges(shape))
    return grid_model(shape, np.ones(m), float(theta0) * y.pixels.astype(np.float64))


def add_noise(x0: BinaryImage, kind: str, p: float, seed: int) -> BinaryImage:
    if not 0.0 <= p <= 1.0:
        raise ModelError(f"flip probability {p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    img = x0.to_array()
    if kind == "bernoulli":
        flip = rng.random(img.shape) < p
    elif kind == "blockwise":
        centers = rng.random(img.shape) < p
        padded = np.pad(centers, 1)
        h, w = img.shape
        flip = np.zeros_like(centers)
        for dr in range(3):
            for dc in range(3):
                flip |= padded[dr:dr + h, dc:dc + w]
    else:
        raise ModelError(f"unknown noise kind {kind!r}")
    return BinaryImage.from_array(np.where(flip, -img, img))
