"""Coupled field-atom propagation through the medium.

Fields are advanced in the dimensionless depth zeta with an explicit
midpoint (second order) scheme.  Internally each slice is represented by the
complex envelopes G = Omega * exp(i phi), for which the envelope and phase
equations collapse into one regular complex equation per pulse,

    dGp/dzeta = i q conj(b1) b2,      dGs/dzeta = i conj(b3) b2,

with (b1, b2, b3) the state amplitudes in the complex-envelope frame.  The
exported slices carry nonnegative amplitudes and unwrapped phases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atom_dynamics import (
    AmplitudeTrajectory,
    DressedPopulations,
    _delta_p_eff,
    _integrate_envelopes,
    projections,
)
from .domain import FieldSlice, InputPulseSpec, MediumParams, SimulationGrid, gaussian_entrance
from .errors import PropagationError

__all__ = [
    "Snapshot",
    "SimulationRecord",
    "ConservationResiduals",
    "step_depth",
    "run",
    "diagnostics",
    "conservation_residuals",
]

#: Relative amplitude floor below which envelope phases (and the detuning
#: diagnostics derived from them) are treated as undefined.
PHASE_FLOOR_REL = 1e-8


@dataclass(frozen=True)
class Diagnostics:
    """Per-slice derived quantities on the tau grid (NaN where undefined)."""

    photon_density: np.ndarray  # n = Omega_p^2/q_p + Omega_s^2/q_s, in units of 1/q_s
    two_photon_strength: np.ndarray  # Q(theta), same units as q_s
    delta_eff: np.ndarray  # delta0 + d(phi_p - phi_s)/dtau
    delta_p_eff: np.ndarray  # delta_p0 + d phi_p/dtau
    theta: np.ndarray
    psi: np.ndarray


@dataclass(frozen=True)
class Snapshot:
    zeta: float
    fields: FieldSlice
    trajectory: AmplitudeTrajectory
    diag: Diagnostics
    dressed: DressedPopulations
    efficiency: float


@dataclass(frozen=True)
class SimulationRecord:
    """Sequence of depth snapshots produced by :func:`run`."""

    params: MediumParams
    pulse_spec: InputPulseSpec
    grid: SimulationGrid
    dzeta: float
    snapshots: tuple[Snapshot, ...]

    @property
    def zetas(self) -> np.ndarray:
        return np.array([s.zeta for s in self.snapshots])

    @property
    def efficiencies(self) -> np.ndarray:
        return np.array([s.efficiency for s in self.snapshots])

    def snapshot_at(self, zeta: float) -> Snapshot:
        for s in self.snapshots:
            if abs(s.zeta - zeta) <= 1e-9 * max(1.0, abs(zeta)):
                return s
        raise KeyError(f"no snapshot at zeta = {zeta}")


def _sources(
    gp: np.ndarray, gs: np.ndarray, dtau: float, params: MediumParams, substeps: int | None
) -> tuple[np.ndarray, np.ndarray]:
    """Polarization source terms for the complex envelope equations."""
    b, _, _ = _integrate_envelopes(gp, gs, dtau, params, substeps, norm_tol=1e-5)
    src_p = 1j * params.q * np.conj(b[:, 0]) * b[:, 1]
    src_s = 1j * np.conj(b[:, 2]) * b[:, 1]
    return src_p, src_s


def _step_envelopes(
    gp: np.ndarray,
    gs: np.ndarray,
    dtau: float,
    params: MediumParams,
    dzeta: float,
    substeps: int | None,
) -> tuple[np.ndarray, np.ndarray]:
    """One explicit-midpoint step of the envelopes in zeta."""
    sp1, ss1 = _sources(gp, gs, dtau, params, substeps)
    gp_mid = gp + 0.5 * dzeta * sp1
    gs_mid = gs + 0.5 * dzeta * ss1
    sp2, ss2 = _sources(gp_mid, gs_mid, dtau, params, substeps)
    gp_new = gp + dzeta * sp2
    gs_new = gs + dzeta * ss2
    if not (np.all(np.isfinite(gp_new.view(float))) and np.all(np.isfinite(gs_new.view(float)))):
        raise PropagationError("non-finite envelope after depth step; reduce dzeta")
    return gp_new, gs_new


def _to_slice(tau: np.ndarray, gp: np.ndarray, gs: np.ndarray) -> FieldSlice:
    return FieldSlice(
        tau=tau,
        omega_p=np.abs(gp),
        omega_s=np.abs(gs),
        phi_p=np.unwrap(np.angle(gp)),
        phi_s=np.unwrap(np.angle(gs)),
    )


def step_depth(
    slice_: FieldSlice,
    params: MediumParams,
    grid: SimulationGrid,
    dzeta: float,
    *,
    substeps: int | None = None,
) -> FieldSlice:
    """Advance a field slice by one depth step of size dzeta > 0.

    Equivalent to updating amplitudes by d Omega_p/dzeta = -q Im(a1* a2),
    d Omega_s/dzeta = -Im(a3* a2) and phases by Omega_p d phi_p/dzeta =
    q Re(a1* a2), Omega_s d phi_s/dzeta = Re(a3* a2), with the midpoint
    sources recomputed from a fresh trajectory integration; the complex
    representation keeps the phase update regular where an envelope
    vanishes (amplitudes can then never be driven negative).
    """
    if dzeta <= 0.0 or not np.isfinite(dzeta):
        raise ValueError(f"dzeta must be positive, got {dzeta}")
    dtau = grid.dtau
    gp, gs = slice_.complex_envelopes()
    gp, gs = _step_envelopes(gp, gs, dtau, params, dzeta, substeps)
    return _to_slice(slice_.tau, gp, gs)


def diagnostics(slice_: FieldSlice, traj: AmplitudeTrajectory, params: MediumParams) -> Diagnostics:
    """Photon density, two-photon strength and effective detunings of a slice.

    Detuning diagnostics require phase derivatives and are masked (NaN) where
    the relevant envelope is below ``PHASE_FLOOR_REL`` of its peak, since the
    phase of a vanishing envelope carries no information.
    """
    if traj.tau.size != slice_.n_tau:
        raise ValueError("trajectory and slice are on different grids")
    wp, ws = slice_.omega_p, slice_.omega_s
    q = params.q
    n = wp**2 / q + ws**2

    omega = np.hypot(wp, ws)
    theta = np.where(omega > 0.0, np.arctan2(wp, ws), np.nan)
    qp, qs = params.q_p, params.q_s
    with np.errstate(invalid="ignore"):
        big_q = qp * qs / (qs * np.sin(theta) ** 2 + qp * np.cos(theta) ** 2)

    dp_eff = _delta_p_eff(slice_, params)
    psi = 0.5 * np.arctan2(2.0 * omega, dp_eff)

    tau = slice_.tau
    dphi_p = np.gradient(slice_.phi_p, tau)
    dphi_s = np.gradient(slice_.phi_s, tau)
    mask_p = wp >= PHASE_FLOOR_REL * max(float(wp.max()), 1e-300)
    mask_s = ws >= PHASE_FLOOR_REL * max(float(ws.max()), 1e-300)
    delta_p_eff = np.where(mask_p, params.delta_p0 + dphi_p, np.nan)
    delta_eff = np.where(mask_p & mask_s, params.delta_two0 + dphi_p - dphi_s, np.nan)

    return Diagnostics(
        photon_density=n,
        two_photon_strength=big_q,
        delta_eff=delta_eff,
        delta_p_eff=delta_p_eff,
        theta=theta,
        psi=psi,
    )


def _make_snapshot(
    zeta: float,
    tau: np.ndarray,
    gp: np.ndarray,
    gs: np.ndarray,
    params: MediumParams,
    substeps: int | None,
) -> Snapshot:
    slice_ = _to_slice(tau, gp, gs)
    b, dev, _ = _integrate_envelopes(gp, gs, float(tau[1] - tau[0]), params, substeps, 1e-5)
    traj = AmplitudeTrajectory(
        tau=tau,
        a1=b[:, 0],
        a2=b[:, 1] * np.exp(-1j * slice_.phi_p),
        a3=b[:, 2] * np.exp(-1j * (slice_.phi_p - slice_.phi_s)),
        norm_deviation=dev,
    )
    return Snapshot(
        zeta=zeta,
        fields=slice_,
        trajectory=traj,
        diag=diagnostics(slice_, traj, params),
        dressed=projections(traj, slice_, params),
        efficiency=traj.final_p3,
    )


def run(
    spec: InputPulseSpec,
    params: MediumParams,
    grid: SimulationGrid,
    snapshot_zetas,
    *,
    dzeta: float | None = None,
    substeps: int | None = None,
) -> SimulationRecord:
    """Propagate the entrance pulse pair and record snapshots at given depths.

    Marching uses steps of nominal size ``dzeta`` (default: grid.dzeta),
    shrinking the step before each requested depth so snapshots land exactly.
    A zeta = 0 entrance snapshot is always included; it reproduces
    :func:`bstirap.domain.gaussian_entrance` exactly.
    """
    targets = sorted(float(z) for z in snapshot_zetas)
    if not targets:
        raise ValueError("snapshot_zetas must be nonempty")
    if any(z < 0.0 or z > grid.zeta_max + 1e-12 for z in targets):
        raise ValueError(f"snapshot depths must lie within [0, {grid.zeta_max}]")
    if any(t2 - t1 <= 0.0 for t1, t2 in zip(targets, targets[1:])):
        raise ValueError("snapshot depths must be strictly increasing")
    if targets[0] > 0.0:
        targets.insert(0, 0.0)

    h_nominal = dzeta if dzeta is not None else grid.dzeta
    if targets[-1] > 0.0 and not (h_nominal > 0.0):
        raise ValueError("a positive dzeta is required to reach nonzero depths")

    entrance = gaussian_entrance(spec, grid)
    tau = grid.tau
    gp, gs = entrance.complex_envelopes()

    snapshots = []
    zeta = 0.0
    for target in targets:
        remaining = target - zeta
        if remaining > 1e-12:
            # Full nominal steps, then one shrunk step landing exactly on target.
            n_full = max(0, int(np.floor(remaining / h_nominal - 1e-9)))
            for _ in range(n_full):
                gp, gs = _step_envelopes(gp, gs, grid.dtau, params, h_nominal, substeps)
            h_last = target - (zeta + n_full * h_nominal)
            if h_last > 1e-12:
                gp, gs = _step_envelopes(gp, gs, grid.dtau, params, h_last, substeps)
            zeta = target
        if target == 0.0:
            # Entrance snapshot carries the constructed slice verbatim.
            snap = _make_snapshot(0.0, tau, gp, gs, params, substeps)
            snap = Snapshot(
                zeta=0.0,
                fields=entrance,
                trajectory=snap.trajectory,
                diag=snap.diag,
                dressed=snap.dressed,
                efficiency=snap.efficiency,
            )
            snapshots.append(snap)
        else:
            snapshots.append(_make_snapshot(zeta, tau, gp, gs, params, substeps))

    return SimulationRecord(
        params=params,
        pulse_spec=spec,
        grid=grid,
        dzeta=h_nominal,
        snapshots=tuple(snapshots),
    )


@dataclass(frozen=True)
class ConservationResiduals:
    """Finite-difference residuals of the propagation conservation laws."""

    photon_law_linf: float  # max |d n/d zeta + d|a2|^2/d tau|
    photon_law_rel: float  # ... relative to the peak flux derivative
    flux_scale: float  # max |d n/d zeta|
    delta_law_linf: float  # residual of the two-photon detuning transport law


def conservation_residuals(record: SimulationRecord) -> ConservationResiduals:
    """Evaluate the photon-number and detuning transport laws across snapshots.

    The photon law is the dimensionless ``dn/dzeta + d|a2|^2/dtau = 0``; the
    detuning law is ``d delta/dzeta = 2 (q - 1)/delta_p0 * dn/dzeta``.  Both
    are estimated midpoint-centered between adjacent snapshots, so accuracy
    is limited by the snapshot spacing.
    """
    snaps = record.snapshots
    if len(snaps) < 2:
        raise ValueError("conservation residuals need at least two snapshots")
    tau = record.grid.tau
    q = record.params.q

    photon_linf = 0.0
    flux_scale = 0.0
    delta_linf = 0.0
    for s0, s1 in zip(snaps, snaps[1:]):
        dz = s1.zeta - s0.zeta
        dn_dz = (s1.diag.photon_density - s0.diag.photon_density) / dz
        p2_mid = 0.5 * (np.abs(s0.trajectory.a2) ** 2 + np.abs(s1.trajectory.a2) ** 2)
        resid = dn_dz + np.gradient(p2_mid, tau)
        photon_linf = max(photon_linf, float(np.max(np.abs(resid))))
        flux_scale = max(flux_scale, float(np.max(np.abs(dn_dz))))

        dd_dz = (s1.diag.delta_eff - s0.diag.delta_eff) / dz
        rhs = 2.0 * (q - 1.0) / record.params.delta_p0 * dn_dz
        diff = np.abs(dd_dz - rhs)
        if np.any(np.isfinite(diff)):
            delta_linf = max(delta_linf, float(np.nanmax(diff)))

    rel = photon_linf / flux_scale if flux_scale > 0.0 else 0.0
    return ConservationResiduals(
        photon_law_linf=photon_linf,
        photon_law_rel=rel,
        flux_scale=flux_scale,
        delta_law_linf=delta_linf,
    )
