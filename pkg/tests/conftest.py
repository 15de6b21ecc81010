"""Independent reference implementations shared by the tests.

Nothing here imports the solver internals: each oracle is a direct,
slow restatement of the quantity it checks.
"""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from psos.model import GraphModel

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def all_assignments(n: int) -> np.ndarray:
    """Every x in {+1,-1}^n, rows in lexicographic order with +1 before -1."""
    return np.array(list(itertools.product((1, -1), repeat=n)), dtype=np.float64).reshape(-1, n)


def brute_values(model: GraphModel) -> tuple[np.ndarray, np.ndarray]:
    X = all_assignments(model.num_vertices)
    vals = X @ model.vertex_weights
    for (i, j), w in zip(model.edges.tolist(), model.edge_weights):
        vals = vals + w * X[:, i] * X[:, j]
    return X, vals


def brute_map(model: GraphModel) -> tuple[np.ndarray, float]:
    """Plain enumeration; the first maximiser in +1-before--1 lexicographic order."""
    X, vals = brute_values(model)
    best = vals.max()
    k = int(np.flatnonzero(vals >= best - 1e-9 * max(1.0, abs(best)))[0])
    return X[k].astype(np.int8), float(vals[k])


def brute_marginals(model: GraphModel) -> np.ndarray:
    """P(x_i = +1) under p(x) proportional to exp(U(x))."""
    X, vals = brute_values(model)
    p = np.exp(vals - vals.max())
    p /= p.sum()
    return p @ (X > 0)


def random_tree(rng: np.random.Generator, n: int, field_scale: float = 1.0) -> GraphModel:
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    return GraphModel(n, np.array(edges, dtype=np.int64).reshape(-1, 2),
                      rng.normal(size=n - 1), field_scale * rng.normal(size=n))


def random_graph(rng: np.random.Generator, n: int, p: float = 0.4) -> GraphModel:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return GraphModel(n, np.array(edges, dtype=np.int64).reshape(-1, 2),
                      rng.normal(size=len(edges)), rng.normal(size=n))


def frustrated_triangle() -> GraphModel:
    return GraphModel(3, [(0, 1), (0, 2), (1, 2)], [-1.0, -1.0, -1.0], [0.0, 0.0, 0.0])


def sphere_oracle(H, g, grid: int = 2000, polish: int = 4000, seed: int = 0) -> np.ndarray:
    """Dense sphere search for max <g,x> - x^T H x / 2 with ||x|| = 1.

    Random directions (plus +-basis vectors) are scored, the best few are
    polished by projected gradient ascent with a shrinking step.
    """
    H = np.asarray(H, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    r = len(g)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((grid * r, r))
    X = np.vstack([X, np.eye(r), -np.eye(r)])
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    f = X @ g - 0.5 * np.einsum("ij,jk,ik->i", X, H, X)
    best = None
    step0 = 1.0 / (1.0 + np.abs(np.linalg.eigvalsh(H)).max() + np.linalg.norm(g))
    for k in np.argsort(f)[-8:]:
        x = X[k].copy()
        step = step0
        for _ in range(polish):
            grad = g - H @ x
            y = x + step * grad
            y /= np.linalg.norm(y)
            if y @ g - 0.5 * y @ H @ y >= x @ g - 0.5 * x @ H @ x:
                x = y
            else:
                step *= 0.5
                if step < 1e-16:
                    break
        val = x @ g - 0.5 * x @ H @ x
        if best is None or val > best[0]:
            best = (val, x)
    return best[1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
