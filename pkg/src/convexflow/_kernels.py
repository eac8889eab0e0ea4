"""The hot advance loop, written once and compiled two ways.

`advance` below is plain numpy and doubles as the fallback lane; when numba
is importable the same function object is also compiled with
njit(cache=True, nogil=True) as `advance_jit`. Which lane a run uses is
resolved from the CONVEXFLOW_BACKEND environment variable (auto | numba |
numpy) or an explicit argument. Spectral derivatives appear here as dense
matrix products (numba has no FFT); the matrices are built from the FFT
route column by column, so both lanes and the public spectral API realize
the identical linear operator.

The loop owns its arrays: callers pass a writable copy of the curvature
samples and treat the returned array as the new state.
"""

from __future__ import annotations

import os

import numpy as np

# law ids, fixed across lanes
LAW_LP = 0
LAW_AP = 1
LAW_G1 = 2
LAW_G2 = 3
LAW_CONTRACTION = 4

# status codes returned by advance
STATUS_OK = 0
STATUS_BUDGET = 1
STATUS_CONVEXITY = 2
STATUS_BLOWUP = 3
STATUS_NONFINITE = 4

ENV_VAR = "CONVEXFLOW_BACKEND"


def advance(
    k,
    s_accum,
    span,
    dtheta,
    alpha,
    law_id,
    D2,
    SOLVE,
    cos_t,
    sin_t,
    safety,
    dt_min,
    dt_max,
    blowup_k,
    project,
    step_budget,
):
    """Advance curvature samples by `span` with adaptive RK4.

    Returns (k, s_accum, t_local, steps, status). On a guard trip the
    returned state is the last good one and t_local is how far it got.
    s_accum integrates the quadrature of k^alpha over time (feeds the
    lower-bound functional).
    """
    n = k.shape[0]
    two_pi = dtheta * n
    t_local = 0.0
    steps = 0
    while t_local < span:
        if steps >= step_budget:
            return k, s_accum, t_local, steps, STATUS_BUDGET
        kmax = k.max()
        dt = safety * dtheta * dtheta / (alpha * kmax ** (alpha + 1.0))
        if dt < dt_min:
            dt = dt_min
        if dt > dt_max:
            dt = dt_max
        rem = span - t_local
        last = rem <= dt
        if last:
            dt = rem

        # classical RK4; each stage state feeds the next, lambda recomputed
        f_acc = np.zeros(n)
        f_prev = np.zeros(n)
        q_acc = 0.0
        for stage in range(4):
            if stage == 0:
                ks = k
            elif stage == 3:
                ks = k + dt * f_prev
            else:
                ks = k + (0.5 * dt) * f_prev
            if ks.min() <= 0.0:
                return k, s_accum, t_local, steps, STATUS_CONVEXITY
            v = np.exp(alpha * np.log(ks))
            d2v = np.dot(D2, v)
            q = dtheta * v.sum()
            if law_id == LAW_LP:
                lam = q / two_pi
            elif law_id == LAW_AP:
                w = 1.0 / ks
                lam = (v * w).sum() / w.sum()
            elif law_id == LAW_G1:
                w = 1.0 / ks
                u = np.dot(SOLVE, w)
                L = dtheta * w.sum()
                A = 0.5 * dtheta * (u * w).sum()
                lam = (2.0 * A / (L * L)) * q
            elif law_id == LAW_G2:
                w = 1.0 / ks
                u = np.dot(SOLVE, w)
                L = dtheta * w.sum()
                A = 0.5 * dtheta * (u * w).sum()
                lam = (L / (2.0 * two_pi * A)) * (dtheta * (v * w).sum())
            else:
                lam = 0.0
            f = ks * ks * (d2v + v - lam)
            if stage == 0 or stage == 3:
                f_acc = f_acc + f
                q_acc += q
            else:
                f_acc = f_acc + 2.0 * f
                q_acc += 2.0 * q
            f_prev = f

        k_new = k + (dt / 6.0) * f_acc
        if not np.all(np.isfinite(k_new)):
            return k, s_accum, t_local, steps, STATUS_NONFINITE
        if k_new.min() <= 0.0:
            return k, s_accum, t_local, steps, STATUS_CONVEXITY
        if k_new.max() >= blowup_k:
            return k, s_accum, t_local, steps, STATUS_BLOWUP

        if project:
            # re-close: strip the first Fourier harmonic of 1/k
            w = 1.0 / k_new
            c1 = (2.0 / n) * (w * cos_t).sum()
            s1 = (2.0 / n) * (w * sin_t).sum()
            w = w - c1 * cos_t - s1 * sin_t
            if w.min() <= 0.0:
                return k, s_accum, t_local, steps, STATUS_CONVEXITY
            k_new = 1.0 / w

        k = k_new
        s_accum = s_accum + (dt / 6.0) * q_acc
        steps += 1
        if last:
            t_local = span
        else:
            t_local = t_local + dt
    return k, s_accum, t_local, steps, STATUS_OK


try:
    import numba

    advance_jit = numba.njit(cache=True, nogil=True)(advance)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    advance_jit = None
    HAVE_NUMBA = False


def resolve_backend(name: str | None = None):
    """Map a backend request onto (label, advance callable).

    `auto` (the default) prefers the jitted lane when numba imported.
    """
    choice = (name or os.environ.get(ENV_VAR, "auto")).strip().lower()
    if choice == "auto":
        return ("numba", advance_jit) if HAVE_NUMBA else ("numpy", advance)
    if choice == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError(
                "CONVEXFLOW_BACKEND=numba requested but numba is not importable"
            )
        return "numba", advance_jit
    if choice == "numpy":
        return "numpy", advance
    raise ValueError(
        f"unknown backend {choice!r}; expected auto, numba, or numpy"
    )
