"""One coordinate-ascent sweep of the augmented Lagrangian.

For every active Gram vector, in order: build its local quadratic from the
catalog incidence, replace it by the global maximiser on the sphere, then step
the multipliers of the equalities it touches (``inc_w`` holds the step sizes). The numba kernel and the
numpy path run the same arithmetic; they differ only in how the per-variable
gather is written.
"""
from __future__ import annotations

import numpy as np

from .._accel import USE_NUMBA, njit

SECULAR_TOL = 1e-12


def _sphere_argmax(H, g, x0):
    # see subproblem.py for the maths; returns (x, mu, secular residual)
    r = g.shape[0]
    w, Q = np.linalg.eigh(H)
    ghat = Q.T @ g
    wmin = w[0]
    scale = max(1.0, abs(w[r - 1]), np.sqrt(np.sum(g * g)))
    deg_tol = 1e-12 * scale
    hard_tol = 1e-14 * scale

    deg_mass = 0.0
    short = 0.0
    for i in range(r):
        gap = w[i] - wmin
        if gap <= deg_tol:
            deg_mass += ghat[i] * ghat[i]
        else:
            short += (ghat[i] / gap) ** 2

    if not (deg_mass <= hard_tol * hard_tol and short <= 1.0):
        lo = -wmin
        hi = -wmin + np.sqrt(np.sum(ghat * ghat)) + 1e-300
        mu = hi
        for _ in range(200):
            d = w + mu
            y = ghat / d
            nrm2 = np.sum(y * y)
            nrm = np.sqrt(nrm2)
            res = nrm - 1.0
            if abs(res) <= SECULAR_TOL:
                break
            if res > 0.0:
                lo = mu
            else:
                hi = mu
            # phi(mu) = 1/||y|| - 1, phi' = (sum y^2/d) / ||y||^3
            dphi = np.sum(y * y / d) / (nrm2 * nrm)
            phi = 1.0 / nrm - 1.0
            step = mu - phi / dphi if dphi > 0.0 else 0.5 * (lo + hi)
            if not (lo < step < hi):
                step = 0.5 * (lo + hi)
            if step == mu:
                break
            mu = step
        x = Q @ (ghat / (w + mu))
        nrm = np.sqrt(np.sum(x * x))
        if np.isfinite(nrm) and nrm > 0.0:
            return x / nrm, mu, abs(nrm - 1.0)
        # Newton hit the pole at mu = -wmin in floating point: treat as hard case

    # hard case: mu = -wmin, complete the norm along the bottom eigenspace
    y = np.zeros(r)
    short = 0.0
    for i in range(r):
        gap = w[i] - wmin
        if gap > deg_tol:
            y[i] = ghat[i] / gap
            short += y[i] * y[i]
    if short > 1.0:
        y /= np.sqrt(short)
        short = 1.0
    tau = np.sqrt(1.0 - short)
    # stay as close to x0 as the bottom eigenspace allows
    z = np.zeros(r)
    for i in range(r):
        if w[i] - wmin <= deg_tol:
            z[i] = np.dot(Q[:, i], x0)
    zn = np.sqrt(np.sum(z * z))
    if zn > 0.0:
        z = z / zn
    else:
        z[0] = 1.0
    x = Q @ (y + tau * z)
    nrm = np.sqrt(np.sum(x * x))
    return x / nrm, -wmin, abs(nrm - 1.0)


sphere_argmax_numba = njit(_sphere_argmax)


@njit
def sweep_numba(sig, lam, order, inc_ptr, inc_eq, inc_partner, inc_t, inc_p, inc_sign,
                lin_ptr, lin_idx, lin_coef, inc_w, rho):
    r = sig.shape[1]
    delta = 0.0
    worst = 0.0
    for k in range(order.shape[0]):
        s = order[k]
        c = np.zeros(r)
        for q in range(lin_ptr[s], lin_ptr[s + 1]):
            c += lin_coef[q] * sig[lin_idx[q]]
        lo = inc_ptr[s]
        m = inc_ptr[s + 1] - lo
        A = np.empty((m, r))
        b = np.empty(m)
        lrow = np.empty(m)
        for q in range(m):
            e = lo + q
            A[q] = sig[inc_partner[e]]
            b[q] = np.dot(sig[inc_t[e]], sig[inc_p[e]])
            lrow[q] = inc_sign[e] * lam[inc_eq[e]]
        H = rho * (A.T @ A)
        g = c + rho * (A.T @ (b - lrow))
        old = sig[s].copy()
        new, mu, sec = sphere_argmax_numba(H, g, old)
        if sec > worst:
            worst = sec
        res = A @ old - b
        diff = new - old
        delta += np.sum(diff * diff) + np.sum(res * res)
        sig[s] = new
        res = A @ new - b
        for q in range(m):
            e = lo + q
            lam[inc_eq[e]] += inc_w[e] * inc_sign[e] * res[q]
    return delta, worst


def sweep_numpy(sig, lam, order, inc_ptr, inc_eq, inc_partner, inc_t, inc_p, inc_sign,
                lin_ptr, lin_idx, lin_coef, inc_w, rho):
    delta = 0.0
    worst = 0.0
    for s in order:
        lsl = slice(lin_ptr[s], lin_ptr[s + 1])
        c = lin_coef[lsl] @ sig[lin_idx[lsl]]
        isl = slice(inc_ptr[s], inc_ptr[s + 1])
        A = sig[inc_partner[isl]]
        b = np.einsum("ij,ij->i", sig[inc_t[isl]], sig[inc_p[isl]])
        sign = inc_sign[isl]
        eqs = inc_eq[isl]
        H = rho * (A.T @ A)
        g = c + rho * (A.T @ (b - sign * lam[eqs]))
        old = sig[s].copy()
        new, _, sec = _sphere_argmax(H, g, old)
        worst = max(worst, sec)
        res = A @ old - b
        delta += float(np.sum((new - old) ** 2) + res @ res)
        sig[s] = new
        np.add.at(lam, eqs, inc_w[isl] * sign * (A @ new - b))
    return delta, worst


def sweep(*args, use_numba: bool | None = None):
    if use_numba is None:
        use_numba = USE_NUMBA
    return (sweep_numba if use_numba else sweep_numpy)(*args)
