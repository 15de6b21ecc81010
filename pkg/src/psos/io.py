"""File formats: model text, region lists, PGM images, assignments and Gram states."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .model import BinaryImage, GraphModel, ModelError, RegionCovering, as_assignment
from .sdp import GramIndex, GramState

MODEL_MAGIC = "graphmodel v1"
REGIONS_MAGIC = "regions v1"


class ParseError(ModelError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


def _fmt(x: float) -> str:
    return "%.17g" % x


def _lines(path):
    """(lineno, tokens) for every non-blank line, '#' comments removed."""
    with open(path, encoding="ascii") as fh:
        for k, raw in enumerate(fh, start=1):
            body = raw.split("#", 1)[0].strip()
            if body:
                yield k, body.split()


def _num(tok: str, kind, path, k):
    try:
        v = kind(tok)
    except ValueError:
        raise ParseError(path, k, f"bad number {tok!r}") from None
    if kind is float and not np.isfinite(v):
        raise ParseError(path, k, f"non-finite value {tok!r}")
    return v


def format_model(model: GraphModel) -> str:
    out = [MODEL_MAGIC, f"n {model.num_vertices}"]
    for i, h in enumerate(model.vertex_weights):
        if h != 0.0:
            out.append(f"v {i} {_fmt(h)}")
    for (i, j), w in zip(model.edges.tolist(), model.edge_weights):
        out.append(f"e {i} {j} {_fmt(w)}")
    return "\n".join(out) + "\n"


def write_model(path, model: GraphModel) -> None:
    Path(path).write_text(format_model(model), encoding="ascii")


def read_model(path) -> GraphModel:
    it = _lines(path)
    k, toks = next(it, (1, None))
    if toks is None or " ".join(toks) != MODEL_MAGIC:
        raise ParseError(path, k, f"expected header {MODEL_MAGIC!r}")
    n = None
    h: dict[int, float] = {}
    edges, weights = [], []
    for k, toks in it:
        tag = toks[0]
        if tag == "n":
            if len(toks) != 2 or n is not None:
                raise ParseError(path, k, "malformed or repeated 'n' line")
            n = _num(toks[1], int, path, k)
            if n < 1:
                raise ParseError(path, k, "vertex count must be positive")
            continue
        if n is None:
            raise ParseError(path, k, "'n' line must come before vertices and edges")
        if tag == "v":
            if len(toks) != 3:
                raise ParseError(path, k, "expected 'v <i> <theta>'")
            i = _num(toks[1], int, path, k)
            if not 0 <= i < n:
                raise ParseError(path, k, f"vertex {i} out of range")
            if i in h:
                raise ParseError(path, k, f"vertex {i} listed twice")
            h[i] = _num(toks[2], float, path, k)
        elif tag == "e":
            if len(toks) != 4:
                raise ParseError(path, k, "expected 'e <i> <j> <theta>'")
            i, j = _num(toks[1], int, path, k), _num(toks[2], int, path, k)
            if not (0 <= i < j < n):
                raise ParseError(path, k, f"edge ({i}, {j}) needs 0 <= i < j < n")
            edges.append((i, j))
            weights.append(_num(toks[3], float, path, k))
        else:
            raise ParseError(path, k, f"unknown record {tag!r}")
    if n is None:
        raise ParseError(path, k, "missing 'n' line")
    hv = np.zeros(n)
    for i, v in h.items():
        hv[i] = v
    return GraphModel(n, np.array(edges, dtype=np.int64).reshape(-1, 2), weights, hv)


def write_covering(path, cov: RegionCovering) -> None:
    body = [REGIONS_MAGIC] + ["r " + " ".join(map(str, r)) for r in cov.regions]
    Path(path).write_text("\n".join(body) + "\n", encoding="ascii")


def read_covering(path) -> RegionCovering:
    it = _lines(path)
    k, toks = next(it, (1, None))
    if toks is None or " ".join(toks) != REGIONS_MAGIC:
        raise ParseError(path, k, f"expected header {REGIONS_MAGIC!r}")
    regs = []
    for k, toks in it:
        if toks[0] != "r" or not 2 <= len(toks) <= 5:
            raise ParseError(path, k, "expected 'r <i> [<j> [<k> [<l>]]]'")
        regs.append(tuple(_num(t, int, path, k) for t in toks[1:]))
    return RegionCovering(tuple(regs))


# ---------------------------------------------------------------- PGM


def _pgm_tokens(data: bytes):
    """Header tokens of a PGM file and the offset just past the last one."""
    toks = []
    pos = 0
    while len(toks) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ModelError("truncated PGM header")
        toks.append(data[start:pos].decode("ascii"))
    return toks, pos + 1


def read_pgm(path) -> BinaryImage:
    """P2 or P5 with maxval <= 255; gray >= 128 reads as +1."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), off = _pgm_tokens(data)
    if magic not in ("P2", "P5"):
        raise ModelError(f"unsupported PGM magic {magic!r}")
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise ModelError("malformed PGM header") from None
    if not 0 < maxval <= 255:
        raise ModelError(f"unsupported PGM maxval {maxval}")
    if magic == "P5":
        px = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=off)
    else:
        body = b" ".join(line.split(b"#", 1)[0] for line in data[off:].splitlines())
        px = np.array(body.split(), dtype=np.int64)
    if len(px) != w * h:
        raise ModelError(f"PGM has {len(px)} pixels, expected {w * h}")
    return BinaryImage(w, h, np.where(px >= 128, 1, -1))


def write_pgm(path, img: BinaryImage) -> None:
    gray = np.where(img.to_array() > 0, 255, 0)
    rows = [" ".join(map(str, r)) for r in gray.tolist()]
    Path(path).write_text(f"P2\n{img.width} {img.height}\n255\n" + "\n".join(rows) + "\n",
                          encoding="ascii")


# ---------------------------------------------------------------- assignments, states


def write_assignment(path, x) -> None:
    x = as_assignment(x)
    Path(path).write_text(" ".join("1" if v > 0 else "-1" for v in x) + "\n", encoding="ascii")


def read_assignment(path, n: int | None = None) -> np.ndarray:
    toks = Path(path).read_text(encoding="ascii").split()
    try:
        vals = [int(t) for t in toks]
    except ValueError:
        raise ModelError(f"{path}: assignment entries must be integers") from None
    return as_assignment(np.array(vals), n)


def save_state(path, state: GramState) -> None:
    """Gram state as .npz: vertex count, covered pairs, vectors, multipliers."""
    idx = state.index
    lam = state.multipliers if state.multipliers is not None else np.zeros(0)
    with open(os.fspath(path), "wb") as fh:
        np.savez(fh, num_vertices=idx.num_vertices, pairs=np.array(idx.pairs, dtype=np.int64).reshape(-1, 2),
                 vectors=state.vectors, multipliers=lam)


def load_state(path) -> GramState:
    with np.load(path) as z:
        index = GramIndex(int(z["num_vertices"]), tuple(tuple(p) for p in z["pairs"].tolist()))
        vec = z["vectors"].astype(np.float64)
        lam = z["multipliers"].astype(np.float64)
    if vec.shape[0] != index.size:
        raise ModelError("state vectors do not match the stored index")
    return GramState(index, vec, lam if len(lam) else None)
