"""Single-atom dynamics: Hamiltonian, dressed frame, trajectory integration.

All quantities are dimensionless (frequencies x T, time in units of T, see
:mod:`bstirap.domain`).  State amplitudes are reported in the frame where
both couplings are real: envelope phases enter the dynamics through their
tau-derivatives as shifts of the one- and two-photon detunings.  Internally
the integration runs on the complex envelopes with constant entrance
detunings, which is exactly equivalent and avoids differentiating phases
numerically.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._kernels import cubic_weight_table, integrate_three_level, pad_ghost
from .domain import FieldSlice, MediumParams, SimulationGrid
from .errors import DegenerateFrameError, IntegrationAccuracyError

__all__ = [
    "AmplitudeTrajectory",
    "DressedFrame",
    "DressedPopulations",
    "MarginTraces",
    "hamiltonian",
    "mixing_angles",
    "dressed_frame",
    "integrate_schrodinger",
    "projections",
    "adiabaticity_margins",
]

#: Per-substep phase bound used to pick the RK4 substep count; keeps the
#: accumulated norm drift of figure-grade trajectories below ~1e-8.
_PHASE_PER_SUBSTEP = 0.0125

#: Default ceiling on the allowed norm drift of one trajectory.
NORM_TOLERANCE_DEFAULT = 1e-6


@dataclass(frozen=True)
class AmplitudeTrajectory:
    """Complex amplitudes (a1, a2, a3) over the tau grid, real-coupling frame."""

    tau: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    norm_deviation: float

    @property
    def populations(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.abs(self.a1) ** 2, np.abs(self.a2) ** 2, np.abs(self.a3) ** 2

    @property
    def final_p3(self) -> float:
        return float(abs(self.a3[-1]) ** 2)


@dataclass(frozen=True)
class DressedFrame:
    """Adiabatic basis at two-photon resonance.

    ``b1``, ``b2``, ``d`` hold the analytic eigenvectors as (..., 3) arrays in
    the bare basis (|1>, |2>, |3>); the eigenvalues come from direct
    diagonalisation, paired to the analytic vectors by maximal overlap.
    """

    theta: np.ndarray
    psi: np.ndarray
    lambda_b1: np.ndarray
    lambda_b2: np.ndarray
    lambda_d: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class DressedPopulations:
    """Projections of the state vector onto the dressed basis, over tau."""

    p_b1: np.ndarray
    p_b2: np.ndarray
    p_d: np.ndarray
    defined: np.ndarray  # False where the frame is undefined (Omega == 0)


@dataclass(frozen=True)
class MarginTraces:
    """Nonadiabatic coupling ratios; adiabatic following needs both << 1."""

    bright_bright: np.ndarray  # |<b2| db1/dtau>| / |lambda_b1 - lambda_b2|
    bright_dark: np.ndarray  # |<d| db1/dtau>| / |lambda_b1 - lambda_d|
    valid: np.ndarray


def hamiltonian(omega_p: float, omega_s: float, delta_p: float, delta_two: float) -> np.ndarray:
    """RWA Hamiltonian (units of 1/T) in the bare basis (|1>, |2>, |3>)."""
    vals = (omega_p, omega_s, delta_p, delta_two)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"hamiltonian entries must be finite, got {vals}")
    return np.array(
        [
            [0.0, -omega_p, 0.0],
            [-omega_p, delta_p, -omega_s],
            [0.0, -omega_s, delta_two],
        ]
    )


def mixing_angles(omega_p, omega_s, delta_p):
    """Mixing angles (theta, psi) and generalized Rabi frequency Omega.

    theta = atan2(Omega_p, Omega_s) in [0, pi/2]; psi solves
    tan(2 psi) = 2 Omega / Delta_p with psi in [0, pi/2).  Where both
    envelopes vanish theta is undefined and carried as NaN.
    """
    wp = np.asarray(omega_p, dtype=float)
    ws = np.asarray(omega_s, dtype=float)
    omega = np.hypot(wp, ws)
    theta = np.where(omega > 0.0, np.arctan2(wp, ws), np.nan)
    psi = 0.5 * np.arctan2(2.0 * omega, delta_p)
    if theta.ndim == 0:
        return float(theta), float(psi), float(omega)
    return theta, psi, omega


def _analytic_vectors(theta, psi):
    """Stack the analytic dressed vectors as (..., 3) arrays."""
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(psi), np.cos(psi)
    b1 = np.stack([cp * st, sp, cp * ct], axis=-1)
    b2 = np.stack([sp * st, -cp, sp * ct], axis=-1)
    d = np.stack([ct, np.zeros_like(ct), -st], axis=-1)
    return b1, b2, d


def dressed_frame(omega_p, omega_s, delta_p) -> DressedFrame:
    """Dressed basis and eigenvalues at exact two-photon resonance.

    Vectorized over tau: scalar or 1-d array field inputs.  Raises
    :class:`DegenerateFrameError` where Omega = 0 (the frame is undefined
    outside the pulse overlap).
    """
    wp = np.atleast_1d(np.asarray(omega_p, dtype=float))
    ws = np.atleast_1d(np.asarray(omega_s, dtype=float))
    wp, ws = np.broadcast_arrays(wp, ws)
    omega = np.hypot(wp, ws)
    if np.any(omega == 0.0):
        raise DegenerateFrameError("dressed frame undefined where Omega_p = Omega_s = 0")

    theta = np.arctan2(wp, ws)
    psi = 0.5 * np.arctan2(2.0 * omega, delta_p)
    b1, b2, d = _analytic_vectors(theta, psi)

    h = np.zeros(wp.shape + (3, 3))
    h[..., 0, 1] = -wp
    h[..., 1, 0] = -wp
    h[..., 1, 2] = -ws
    h[..., 2, 1] = -ws
    h[..., 1, 1] = delta_p
    evals, evecs = np.linalg.eigh(h)

    # Pair numeric eigenpairs with the analytic vectors by maximal overlap.
    analytic = np.stack([b1, b2, d], axis=-2)  # (..., 3 vectors, 3 comps)
    overlaps = np.abs(np.einsum("...ki,...ij->...kj", analytic, evecs))
    order = np.argmax(overlaps, axis=-1)  # (..., 3): numeric column per analytic vector
    lam = np.take_along_axis(evals, order.reshape(evals.shape), axis=-1)

    squeeze = np.isscalar(omega_p) and np.isscalar(omega_s)

    def _out(a):
        return a[0] if squeeze and a.shape[0] == 1 else a

    return DressedFrame(
        theta=_out(theta),
        psi=_out(psi),
        lambda_b1=_out(lam[..., 0]),
        lambda_b2=_out(lam[..., 1]),
        lambda_d=_out(lam[..., 2]),
        b1=_out(b1),
        b2=_out(b2),
        d=_out(d),
    )


@lru_cache(maxsize=32)
def _weights(nsub: int) -> np.ndarray:
    return cubic_weight_table(nsub)


#: Refusal threshold: a substep count this large means the fields are far
#: outside the resolvable regime (e.g. a diverging depth step).
_MAX_SUBSTEPS = 100_000


def _auto_substeps(dtau: float, gp: np.ndarray, gs: np.ndarray, params: MediumParams) -> int:
    """Substep count from a Frobenius bound on the Hamiltonian spectral radius."""
    field_sq = float(np.max(np.abs(gp) ** 2 + np.abs(gs) ** 2))
    lam = np.sqrt(params.delta_p0**2 + params.delta_two0**2 + 2.0 * field_sq)
    nsub = max(1, int(np.ceil(dtau * lam / _PHASE_PER_SUBSTEP)))
    if nsub > _MAX_SUBSTEPS:
        raise IntegrationAccuracyError(
            f"fields require {nsub} substeps per grid interval; "
            "amplitudes are outside the resolvable regime"
        )
    return nsub


def _integrate_envelopes(
    gp: np.ndarray,
    gs: np.ndarray,
    dtau: float,
    params: MediumParams,
    substeps: int | None,
    norm_tol: float,
) -> tuple[np.ndarray, float, int]:
    """Drive the compiled integrator on complex envelopes; returns (b, dev, nsub)."""
    nsub = substeps if substeps is not None else _auto_substeps(dtau, gp, gs, params)
    gp_pad = pad_ghost(np.ascontiguousarray(gp, dtype=np.complex128))
    gs_pad = pad_ghost(np.ascontiguousarray(gs, dtype=np.complex128))
    out = np.empty((gp.size, 3), dtype=np.complex128)
    dev = integrate_three_level(
        gp_pad, gs_pad, _weights(nsub), params.delta_p0, params.delta_two0, dtau, nsub, out
    )
    if dev > norm_tol:
        raise IntegrationAccuracyError(
            f"trajectory norm drifted by {dev:.3e} (tolerance {norm_tol:.1e}); "
            "refine the tau grid"
        )
    return out, float(dev), nsub


def integrate_schrodinger(
    fields: FieldSlice,
    params: MediumParams,
    grid: SimulationGrid | None = None,
    *,
    substeps: int | None = None,
    norm_tol: float = NORM_TOLERANCE_DEFAULT,
) -> AmplitudeTrajectory:
    """Integrate the three-level system along tau for the given field slice.

    The initial state is a = (1, 0, 0) at tau_min.  Envelope phases act
    through their tau-derivatives as time-dependent shifts of the one- and
    two-photon detunings; this is implemented exactly by propagating the
    complex envelopes at fixed entrance detunings and transforming back.

    ``substeps`` fixes the RK4 substep count per grid interval (used by
    convergence studies); by default it is chosen from a spectral bound so
    the norm drift stays well below ``norm_tol``, which is enforced.
    """
    if grid is not None and (
        fields.n_tau != grid.n_tau or abs(fields.tau[0] - grid.tau_min) > 1e-12
    ):
        raise ValueError("field slice does not match the supplied grid")
    dtau = float(fields.tau[1] - fields.tau[0])
    gp, gs = fields.complex_envelopes()
    b, dev, _ = _integrate_envelopes(gp, gs, dtau, params, substeps, norm_tol)
    # Gauge back to the real-coupling frame of the exported amplitudes.
    a1 = b[:, 0]
    a2 = b[:, 1] * np.exp(-1j * fields.phi_p)
    a3 = b[:, 2] * np.exp(-1j * (fields.phi_p - fields.phi_s))
    return AmplitudeTrajectory(tau=fields.tau, a1=a1, a2=a2, a3=a3, norm_deviation=dev)


def _delta_p_eff(fields: FieldSlice, params: MediumParams) -> np.ndarray:
    """Effective one-photon detuning including the envelope phase derivative."""
    return params.delta_p0 + np.gradient(fields.phi_p, fields.tau)


def projections(
    traj: AmplitudeTrajectory, fields: FieldSlice, params: MediumParams
) -> DressedPopulations:
    """Populations of the dressed states |b1>, |b2>, |d> along tau.

    The basis is the two-photon-resonant one evaluated at the instantaneous
    effective one-photon detuning; samples where the frame is undefined
    (Omega = 0) are flagged and returned as NaN.
    """
    if traj.tau.size != fields.n_tau or abs(traj.tau[0] - fields.tau[0]) > 1e-12:
        raise ValueError("trajectory and field slice are on different grids")
    wp, ws = fields.omega_p, fields.omega_s
    omega = np.hypot(wp, ws)
    defined = omega > 0.0

    theta = np.where(defined, np.arctan2(wp, ws), 0.0)
    psi = 0.5 * np.arctan2(2.0 * omega, _delta_p_eff(fields, params))
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(psi), np.cos(psi)

    a1, a2, a3 = traj.a1, traj.a2, traj.a3
    amp_b1 = cp * st * a1 + sp * a2 + cp * ct * a3
    amp_b2 = sp * st * a1 - cp * a2 + sp * ct * a3
    amp_d = ct * a1 - st * a3

    nan = np.where(defined, 0.0, np.nan)
    return DressedPopulations(
        p_b1=np.abs(amp_b1) ** 2 + nan,
        p_b2=np.abs(amp_b2) ** 2 + nan,
        p_d=np.abs(amp_d) ** 2 + nan,
        defined=defined,
    )


def adiabaticity_margins(
    fields: FieldSlice, params: MediumParams, grid: SimulationGrid | None = None
) -> MarginTraces:
    """Nonadiabatic coupling margins of the bright state along tau.

    db1/dtau is estimated by centered finite differences of the dressed
    vector (one-sided at the boundaries).  Samples where the frame is
    undefined are flagged False in ``valid`` and returned as NaN; note the
    margins necessarily blow up outside the pulse overlap region, where
    adiabatic following is not meaningful.
    """
    tau = grid.tau if grid is not None else fields.tau
    wp, ws = fields.omega_p, fields.omega_s
    omega = np.hypot(wp, ws)
    valid = omega > 0.0
    if not np.any(valid):
        nanarr = np.full(tau.shape, np.nan)
        return MarginTraces(nanarr, nanarr.copy(), valid)

    # Placeholder amplitudes at flagged samples keep the frame constructible;
    # those samples are masked to NaN below.
    wp_safe = np.where(valid, wp, 1.0)
    ws_safe = np.where(valid, ws, 1.0)
    frame = dressed_frame(wp_safe, ws_safe, _delta_p_eff(fields, params))

    db1 = np.gradient(frame.b1, tau, axis=0)
    coup_b2 = np.abs(np.einsum("ij,ij->i", frame.b2, db1))
    coup_d = np.abs(np.einsum("ij,ij->i", frame.d, db1))

    gap_b2 = np.abs(frame.lambda_b1 - frame.lambda_b2)
    gap_d = np.abs(frame.lambda_b1 - frame.lambda_d)
    with np.errstate(divide="ignore", invalid="ignore"):
        m_b2 = np.where(valid, coup_b2 / gap_b2, np.nan)
        m_d = np.where(valid, coup_d / gap_d, np.nan)
    return MarginTraces(bright_bright=m_b2, bright_dark=m_d, valid=valid)
