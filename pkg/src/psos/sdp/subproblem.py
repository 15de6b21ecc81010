"""Quadratic maximisation over the unit sphere (trust-region subproblem).

    maximize  <g, x> - 1/2 x^T H x   subject to ||x|| = 1,   H symmetric PSD

Any global maximiser satisfies (H + mu I) x = g with H + mu I positive
semidefinite, so mu >= -lambda_min(H). With H = Q diag(w) Q^T the secular
equation sum_i ghat_i^2 / (w_i + mu)^2 = 1 is monotone on (-w_min, inf) and
is solved by safeguarded Newton on 1/||x(mu)|| - 1 (More-Sorensen). When g
has no component along the bottom eigenspace and the remaining solution is
short, the hard case is resolved by adding a bottom eigenvector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import _sphere_argmax


def sphere_argmax(H, g, x0=None):
    """Global maximiser of <g,x> - x^T H x / 2 on the unit sphere.

    Returns ``(x, mu, secular_residual)``; ``x0`` only breaks the sign tie in
    the hard case.
    """
    H = np.ascontiguousarray(H, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    if x0 is None:
        x0 = np.zeros_like(g)
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(g))):
        raise FloatingPointError("non-finite input to sphere subproblem")
    return _sphere_argmax(H, g, np.asarray(x0, dtype=np.float64))


@dataclass
class LocalSystem:
    """Block of the augmented Lagrangian seen by one Gram vector.

    Rows of ``A`` are the partner vectors, ``b`` the opposite inner products,
    ``lam`` the (scaled) multipliers rewritten with the variable on the left.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        if not (len(self.A) == len(self.b) == len(self.lam)):
            raise ValueError("row counts of A, b and lam disagree")

    def quadratic(self, rho: float):
        H = rho * self.A.T @ self.A
        g = self.c + rho * self.A.T @ (self.b - self.lam)
        return H, g

    def value(self, x, rho: float) -> float:
        r = self.A @ x - self.b + self.lam
        return float(self.c @ x - 0.5 * rho * r @ r)


def solve_subproblem(sys: LocalSystem, rho: float, x0=None) -> np.ndarray:
    """Maximise <c, x> - rho/2 ||A x - b + lam||^2 over ||x|| = 1."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    H, g = sys.quadratic(rho)
    x, _, _ = sphere_argmax(H, g, x0)
    return x
