"""Compiled inner loops for the three-level Schrodinger integration.

The integrator marches the complex state (b1, b2, b3) along the tau grid
with a classical fixed-substep RK4 scheme.  Fields are supplied as complex
envelopes at the grid nodes; values at RK substep points are obtained from
the four-point piecewise-cubic Lagrange interpolant, evaluated on the fly
through a precomputed weight table so no fine-grid temporaries are
allocated.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["cubic_weight_table", "pad_ghost", "integrate_three_level"]


def cubic_weight_table(nsub: int) -> np.ndarray:
    """Weights of the 4-point cubic Lagrange interpolant at half-substep points.

    Row j corresponds to the fraction f = j / (2 nsub) of a grid interval,
    j = 0 .. 2 nsub; columns weight the nodes at offsets (-1, 0, 1, 2).
    """
    f = np.arange(2 * nsub + 1, dtype=float) / (2.0 * nsub)
    w = np.empty((f.size, 4))
    w[:, 0] = -f * (f - 1.0) * (f - 2.0) / 6.0
    w[:, 1] = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0
    w[:, 2] = -(f + 1.0) * f * (f - 2.0) / 2.0
    w[:, 3] = (f + 1.0) * f * (f - 1.0) / 6.0
    return w


def pad_ghost(values: np.ndarray) -> np.ndarray:
    """Append cubic-extrapolated ghost nodes so the 4-point stencil is uniform."""
    v = np.asarray(values)
    out = np.empty(v.size + 2, dtype=v.dtype)
    out[1:-1] = v
    out[0] = 4.0 * v[0] - 6.0 * v[1] + 4.0 * v[2] - v[3]
    out[-1] = 4.0 * v[-1] - 6.0 * v[-2] + 4.0 * v[-3] - v[-4]
    return out


@njit(cache=True, nogil=True, fastmath=True)
def integrate_three_level(gp_pad, gs_pad, wtab, delta_p, delta_two, dtau, nsub, out):
    """RK4 march of the complex three-level system across the tau grid.

    Dimensionless equations (time in units of T, couplings x T), with
    complex envelopes G and constant entrance detunings:

        b1' = i conj(Gp) b2
        b2' = i (Gp b1 - delta_p b2 + Gs b3)
        b3' = i (conj(Gs) b2 - delta_two b3)

    gp_pad, gs_pad : ghost-padded node envelopes, length n + 2.
    wtab           : weight table from :func:`cubic_weight_table`.
    out            : preallocated (n, 3) complex array; out[0] = (1, 0, 0).

    Returns the maximum deviation of |b|^2 from 1 over the grid nodes.
    """
    n = gp_pad.shape[0] - 2
    h = dtau / nsub

    b1 = 1.0 + 0.0j
    b2 = 0.0 + 0.0j
    b3 = 0.0 + 0.0j
    out[0, 0] = b1
    out[0, 1] = b2
    out[0, 2] = b3
    dev = 0.0

    for i in range(n - 1):
        p_m1 = gp_pad[i]
        p_0 = gp_pad[i + 1]
        p_1 = gp_pad[i + 2]
        p_2 = gp_pad[i + 3]
        s_m1 = gs_pad[i]
        s_0 = gs_pad[i + 1]
        s_1 = gs_pad[i + 2]
        s_2 = gs_pad[i + 3]

        # Value at fraction index j (j = 0 corresponds to node i).
        gp_lo = p_0
        gs_lo = s_0
        for s in range(nsub):
            jm = 2 * s + 1
            jh = 2 * s + 2
            gp_mid = wtab[jm, 0] * p_m1 + wtab[jm, 1] * p_0 + wtab[jm, 2] * p_1 + wtab[jm, 3] * p_2
            gs_mid = wtab[jm, 0] * s_m1 + wtab[jm, 1] * s_0 + wtab[jm, 2] * s_1 + wtab[jm, 3] * s_2
            gp_hi = wtab[jh, 0] * p_m1 + wtab[jh, 1] * p_0 + wtab[jh, 2] * p_1 + wtab[jh, 3] * p_2
            gs_hi = wtab[jh, 0] * s_m1 + wtab[jh, 1] * s_0 + wtab[jh, 2] * s_1 + wtab[jh, 3] * s_2

            k11 = 1j * (np.conj(gp_lo) * b2)
            k12 = 1j * (gp_lo * b1 - delta_p * b2 + gs_lo * b3)
            k13 = 1j * (np.conj(gs_lo) * b2 - delta_two * b3)

            t1 = b1 + 0.5 * h * k11
            t2 = b2 + 0.5 * h * k12
            t3 = b3 + 0.5 * h * k13
            k21 = 1j * (np.conj(gp_mid) * t2)
            k22 = 1j * (gp_mid * t1 - delta_p * t2 + gs_mid * t3)
            k23 = 1j * (np.conj(gs_mid) * t2 - delta_two * t3)

            t1 = b1 + 0.5 * h * k21
            t2 = b2 + 0.5 * h * k22
            t3 = b3 + 0.5 * h * k23
            k31 = 1j * (np.conj(gp_mid) * t2)
            k32 = 1j * (gp_mid * t1 - delta_p * t2 + gs_mid * t3)
            k33 = 1j * (np.conj(gs_mid) * t2 - delta_two * t3)

            t1 = b1 + h * k31
            t2 = b2 + h * k32
            t3 = b3 + h * k33
            k41 = 1j * (np.conj(gp_hi) * t2)
            k42 = 1j * (gp_hi * t1 - delta_p * t2 + gs_hi * t3)
            k43 = 1j * (np.conj(gs_hi) * t2 - delta_two * t3)

            b1 = b1 + (h / 6.0) * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
            b2 = b2 + (h / 6.0) * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
            b3 = b3 + (h / 6.0) * (k13 + 2.0 * k23 + 2.0 * k33 + k43)

            gp_lo = gp_hi
            gs_lo = gs_hi

        out[i + 1, 0] = b1
        out[i + 1, 1] = b2
        out[i + 1, 2] = b3
        d = abs(
            b1.real * b1.real
            + b1.imag * b1.imag
            + b2.real * b2.real
            + b2.imag * b2.imag
            + b3.real * b3.real
            + b3.imag * b3.imag
            - 1.0
        )
        if d > dev:
            dev = d

    return dev
