"""Closed-form adiabatic theory of the mixing-angle transport.

In the adiabatic limit at large one-photon detuning the mixing angle obeys a
first-order transport equation whose characteristics solution is
``theta(zeta, tau) = theta0(xi)`` with the nonlinear retarded time xi fixed
implicitly by photon bookkeeping:

    C(xi) = C(tau) + (q_p q_s / Q(theta0(xi))^2) * zeta,

where ``C`` is the cumulative entrance photon density and ``Q`` the
theta-weighted two-photon transition strength.  Everything here is a pure
function of the entrance profiles; no propagation solve is involved.

Units as in :mod:`bstirap.domain`: the photon density is reported per unit
q_s (``n = omega_p^2/q + omega_s^2`` with dimensionless amplitudes), and
depth is the dimensionless zeta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .domain import FieldSlice, MediumParams
from .errors import CharacteristicsError

__all__ = [
    "EntranceProfiles",
    "CharacteristicsSolution",
    "BreakdownLength",
    "ValidityLengths",
    "TransferCurve",
    "entrance_profiles",
    "q_of_theta",
    "solve_xi",
    "theta_analytic",
    "factor_A",
    "breakdown_length",
    "validity_lengths",
    "p3_adiabatic",
    "transfer_curve_and_zmax",
    "solve_characteristics",
]

#: Relative floor on the entrance generalized Rabi frequency squared below
#: which the adiabaticity factor is reported as undefined.
OMEGA_SQ_FLOOR_REL = 1e-12

#: Relative floor on Omega_p*Omega_s defining the pulse-overlap region.
OVERLAP_FLOOR_REL = 1e-4


@dataclass(frozen=True)
class EntranceProfiles:
    """Entrance-profile data backing the characteristics solution."""

    tau: np.ndarray
    n0: np.ndarray
    theta0: np.ndarray
    omega0_sq: np.ndarray
    cumulative_n0: np.ndarray
    total_photons: float
    _cum_interp: PchipInterpolator = field(repr=False, compare=False)
    _theta_interp: PchipInterpolator = field(repr=False, compare=False)
    _n0_interp: PchipInterpolator = field(repr=False, compare=False)

    def cum_n0_at(self, xi) -> np.ndarray:
        """Cumulative photon density, clamped to its saturation value."""
        xi = np.asarray(xi, dtype=float)
        lo, hi = self.tau[0], self.tau[-1]
        out = self._cum_interp(np.clip(xi, lo, hi))
        return np.where(xi >= hi, self.total_photons, out)

    def theta0_at(self, xi) -> np.ndarray:
        """Entrance mixing angle, extended by its asymptotic limits."""
        xi = np.asarray(xi, dtype=float)
        lo, hi = self.tau[0], self.tau[-1]
        out = self._theta_interp(np.clip(xi, lo, hi))
        out = np.where(xi > hi, self.theta0[-1], out)
        out = np.where(xi < lo, self.theta0[0], out)
        return out

    def dtheta0_dxi_at(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        lo, hi = self.tau[0], self.tau[-1]
        out = self._theta_interp.derivative()(np.clip(xi, lo, hi))
        return np.where((xi > hi) | (xi < lo), 0.0, out)

    def n0_at(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        lo, hi = self.tau[0], self.tau[-1]
        out = self._n0_interp(np.clip(xi, lo, hi))
        return np.where((xi > hi) | (xi < lo), 0.0, out)


def entrance_profiles(slice0: FieldSlice, params: MediumParams) -> EntranceProfiles:
    """Precompute entrance profiles and their monotone-cubic interpolants."""
    tau = slice0.tau
    wp, ws = slice0.omega_p, slice0.omega_s
    n0 = wp**2 / params.q + ws**2
    theta0 = np.arctan2(wp, ws)
    omega0_sq = wp**2 + ws**2

    dtau = np.diff(tau)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (n0[1:] + n0[:-1]) * dtau)])
    return EntranceProfiles(
        tau=tau,
        n0=n0,
        theta0=theta0,
        omega0_sq=omega0_sq,
        cumulative_n0=cum,
        total_photons=float(cum[-1]),
        _cum_interp=PchipInterpolator(tau, cum),
        _theta_interp=PchipInterpolator(tau, theta0),
        _n0_interp=PchipInterpolator(tau, n0),
    )


def q_of_theta(theta, q_p, q_s):
    """Two-photon transition strength Q(theta) = q_s q_p / (q_s sin^2 + q_p cos^2).

    Bounded between min(q_p, q_s) and max(q_p, q_s); NaN propagates from an
    undefined theta.
    """
    theta = np.asarray(theta, dtype=float)
    out = q_s * q_p / (q_s * np.sin(theta) ** 2 + q_p * np.cos(theta) ** 2)
    return float(out) if out.ndim == 0 else out


def _depth_coefficient(profiles: EntranceProfiles, params: MediumParams, xi) -> np.ndarray:
    """q_p q_s / Q(theta0(xi))^2, scale-invariant in (q_p, q_s)."""
    th = profiles.theta0_at(xi)
    big_q = q_of_theta(th, params.q_p, params.q_s)
    return params.q_p * params.q_s / big_q**2


def _residual(profiles, params, xi, tau, zeta):
    return (
        profiles.cum_n0_at(xi)
        - profiles.cum_n0_at(tau)
        - _depth_coefficient(profiles, params, xi) * zeta
    )


def solve_xi(zeta: float, tau, profiles: EntranceProfiles, params: MediumParams):
    """Nonlinear retarded time xi(zeta, tau) from the photon-bookkeeping equation.

    Returns xi with the same shape as tau; entries are +inf where the pulse
    photon budget is exhausted before the root (transfer already complete at
    that depth, cf. the maximal propagation length).  ``zeta`` must be >= 0;
    at zeta = 0 the identity xi = tau is returned exactly.
    """
    if not (np.isfinite(zeta) and zeta >= 0.0):
        raise CharacteristicsError(f"zeta must be finite and >= 0, got {zeta}")
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    scalar = np.isscalar(tau) or np.ndim(tau) == 0
    if zeta == 0.0:
        xi = tau_arr.copy()
        return float(xi[0]) if scalar else xi

    tau_hi = profiles.tau[-1]
    lo = tau_arr.copy()
    hi = np.minimum(tau_arr + 1.0, tau_hi)

    f_lo = _residual(profiles, params, lo, tau_arr, zeta)
    if np.any(f_lo > 0.0):
        # C is nondecreasing, so F(tau) = -coeff*zeta < 0 must hold.
        raise CharacteristicsError("residual positive at the lower bracket endpoint")

    # Walk the upper endpoint right in steps of one pulse duration.
    unresolved = _residual(profiles, params, hi, tau_arr, zeta) < 0.0
    while np.any(unresolved & (hi < tau_hi)):
        hi = np.where(unresolved, np.minimum(hi + 1.0, tau_hi), hi)
        unresolved = _residual(profiles, params, hi, tau_arr, zeta) < 0.0
    out_of_range = unresolved  # F(tau_max) still negative: budget exhausted

    # Bisection to float precision on the bracketed points.
    active = ~out_of_range
    for _ in range(200):
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        f_mid = _residual(profiles, params, mid, tau_arr, zeta)
        go_right = (f_mid < 0.0) & active
        go_left = (~(f_mid < 0.0)) & active
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_left, mid, hi)
        active = active & ((hi - lo) > 1e-13 * np.maximum(1.0, np.abs(hi)))

    xi = 0.5 * (lo + hi)
    xi = np.where(out_of_range, np.inf, xi)
    return float(xi[0]) if scalar else xi


def theta_analytic(zeta: float, tau, profiles: EntranceProfiles, params: MediumParams):
    """Mixing angle theta0(xi(zeta, tau)); zero where the budget is exhausted."""
    xi = np.atleast_1d(solve_xi(zeta, tau, profiles, params))
    theta = np.where(np.isfinite(xi), profiles.theta0_at(np.where(np.isfinite(xi), xi, 0.0)), 0.0)
    scalar = np.isscalar(tau) or np.ndim(tau) == 0
    return float(theta[0]) if scalar else theta


def factor_A(zeta: float, tau, profiles: EntranceProfiles, params: MediumParams):
    """Adiabaticity factor A and the characteristic stretch dxi/dtau.

    A = 1 - 2 (1 - q) zeta dtheta0/dxi sin(2 theta0) / Omega0^2(xi)  with the
    entrance Rabi frequency reconstructed as Omega0^2 = n0(xi) Q(theta0(xi))
    (per unit q_s); dxi/dtau = (n0(tau)/n0(xi)) / A.  Entries are NaN where
    xi is out of range or Omega0(xi) is below floor (outside the overlap).
    """
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    xi = np.atleast_1d(solve_xi(zeta, tau_arr, profiles, params))
    finite = np.isfinite(xi)
    xi_safe = np.where(finite, xi, profiles.tau[-1])

    theta = profiles.theta0_at(xi_safe)
    dtheta = profiles.dtheta0_dxi_at(xi_safe)
    n0_xi = profiles.n0_at(xi_safe)
    omega_sq = n0_xi * q_of_theta(theta, params.q_p, params.q_s) / params.q_s

    floor = OMEGA_SQ_FLOOR_REL * float(np.max(profiles.omega0_sq))
    ok = finite & (omega_sq > floor)

    with np.errstate(divide="ignore", invalid="ignore"):
        a = 1.0 - 2.0 * (1.0 - params.q) * zeta * dtheta * np.sin(2.0 * theta) / omega_sq
        dxi = (profiles.n0_at(tau_arr) / n0_xi) / a
    a = np.where(ok, a, np.nan)
    dxi = np.where(ok, dxi, np.nan)

    scalar = np.isscalar(tau) or np.ndim(tau) == 0
    if scalar:
        return float(a[0]), float(dxi[0])
    return a, dxi


@dataclass(frozen=True)
class BreakdownLength:
    """Depth at which the adiabaticity factor first reaches zero."""

    zeta_break: float  # scanned over the entrance overlap region
    zeta_estimate: float  # closed-form peak estimate Omega0^2 / (2 (q - 1))
    xi_at_break: float


def breakdown_length(
    profiles: EntranceProfiles,
    params: MediumParams,
    *,
    overlap_floor: float = OVERLAP_FLOOR_REL,
) -> BreakdownLength | None:
    """Finite breakdown depth for q > 1, None otherwise.

    For q <= 1 and intuitive ordering (dtheta0/dxi <= 0) the factor A never
    decreases below 1.  For q > 1, A is linear in zeta at fixed xi, so the
    first zero over the overlap region (Omega_p Omega_s above
    ``overlap_floor`` of the peak Omega^2) is scanned on the entrance grid.
    """
    if params.q <= 1.0:
        return None
    omega_sq_peak = float(np.max(profiles.omega0_sq))
    overlap = 0.5 * np.sin(2.0 * profiles.theta0) * profiles.omega0_sq  # = wp*ws
    mask = overlap > overlap_floor * omega_sq_peak

    dtheta = profiles.dtheta0_dxi_at(profiles.tau)
    omega_sq = profiles.omega0_sq
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = 2.0 * (params.q - 1.0) * (-dtheta) * np.sin(2.0 * profiles.theta0) / omega_sq
    slope = np.where(mask & (slope > 0.0), slope, np.nan)
    if not np.any(np.isfinite(slope)):
        return None
    idx = int(np.nanargmax(slope))
    return BreakdownLength(
        zeta_break=float(1.0 / slope[idx]),
        zeta_estimate=omega_sq_peak / (2.0 * (params.q - 1.0)),
        xi_at_break=float(profiles.tau[idx]),
    )


@dataclass(frozen=True)
class ValidityLengths:
    """Depths at which the photon-transport validity conditions reach epsilon."""

    zeta_cond_general: float
    zeta_cond_large_detuning: float
    epsilon: float


def validity_lengths(
    profiles: EntranceProfiles, params: MediumParams, *, epsilon: float = 0.1
) -> ValidityLengths:
    """Solve the two smallness conditions for the depth at the threshold epsilon.

    The general condition reads  Delta Q zeta / (Delta^2 + 4 n Q)^{3/2} <<
    1, evaluated at peak photon density with the worst-case Q over
    [min(q,1), max(q,1)]; the large-detuning form reduces to
    Q zeta / Delta^2 << 1.
    """
    dp = params.delta_p0
    n_max = float(np.max(profiles.n0))
    q_lo, q_hi = min(params.q, 1.0), max(params.q, 1.0)
    # Q maximizing Q / (Delta^2 + 4 n Q)^(3/2); unconstrained optimum at
    # Delta^2 / (2 n), clamped into the reachable range.
    q_star = min(max(dp**2 / (2.0 * n_max), q_lo), q_hi) if n_max > 0 else q_hi
    zeta_general = epsilon * (dp**2 + 4.0 * n_max * q_star) ** 1.5 / (dp * q_star)
    zeta_large = epsilon * dp**2 / q_hi
    return ValidityLengths(
        zeta_cond_general=float(zeta_general),
        zeta_cond_large_detuning=float(zeta_large),
        epsilon=epsilon,
    )


def p3_adiabatic(zeta: float, tau, profiles: EntranceProfiles, params: MediumParams):
    """Adiabatic-limit transfer probability cos^2(psi) cos^2(theta0(xi)).

    Where the photon budget is exhausted the transfer is complete up to the
    excited-state admixture: theta0 -> 0 and the local Rabi frequency -> 0,
    so P3 -> 1.
    """
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    xi = np.atleast_1d(solve_xi(zeta, tau_arr, profiles, params))
    finite = np.isfinite(xi)
    xi_safe = np.where(finite, xi, profiles.tau[-1])
    theta = np.where(finite, profiles.theta0_at(xi_safe), 0.0)
    omega_sq = np.where(
        finite,
        profiles.n0_at(xi_safe) * q_of_theta(theta, params.q_p, params.q_s) / params.q_s,
        0.0,
    )
    psi = 0.5 * np.arctan2(2.0 * np.sqrt(np.maximum(omega_sq, 0.0)), params.delta_p0)
    p3 = np.cos(psi) ** 2 * np.cos(theta) ** 2
    scalar = np.isscalar(tau) or np.ndim(tau) == 0
    return float(p3[0]) if scalar else p3


@dataclass(frozen=True)
class TransferCurve:
    """Depths of complete transfer and the maximal propagation depth."""

    tau: np.ndarray
    zeta_complete: np.ndarray  # depth at which transfer completes by time tau
    zeta_max: float
    photon_integral: float  # total entrance photon density integral

    @property
    def effective_photon_ratio(self) -> float:
        """Photon bookkeeping at the maximal depth: integral / zeta_max = q."""
        return self.photon_integral / self.zeta_max


def transfer_curve_and_zmax(profiles: EntranceProfiles, params: MediumParams) -> TransferCurve:
    """Complete-transfer curve zeta(tau) and the maximal depth zeta_max.

    zeta(tau) = (total - C(tau)) / q is the depth at which the photons
    remaining past tau exactly cover complete transfer; its value at the
    window start is the maximal propagation depth zeta_max = total / q.
    """
    total = profiles.total_photons
    zeta_curve = (total - profiles.cumulative_n0) / params.q
    return TransferCurve(
        tau=profiles.tau,
        zeta_complete=zeta_curve,
        zeta_max=float(total / params.q),
        photon_integral=total,
    )


@dataclass(frozen=True)
class CharacteristicsSolution:
    """Characteristics solution tabulated on a (zeta, tau) product grid."""

    zetas: np.ndarray
    tau: np.ndarray
    xi: np.ndarray  # (n_zeta, n_tau); +inf where out of range
    theta: np.ndarray
    a_factor: np.ndarray
    dxi_dtau: np.ndarray


def solve_characteristics(
    zetas, profiles: EntranceProfiles, params: MediumParams, tau=None
) -> CharacteristicsSolution:
    """Tabulate xi, theta, A and dxi/dtau for each requested depth."""
    tau_arr = profiles.tau if tau is None else np.asarray(tau, dtype=float)
    z_arr = np.atleast_1d(np.asarray(zetas, dtype=float))
    xi = np.empty((z_arr.size, tau_arr.size))
    th = np.empty_like(xi)
    af = np.empty_like(xi)
    dx = np.empty_like(xi)
    for k, z in enumerate(z_arr):
        xi[k] = solve_xi(float(z), tau_arr, profiles, params)
        th[k] = theta_analytic(float(z), tau_arr, profiles, params)
        af[k], dx[k] = factor_A(float(z), tau_arr, profiles, params)
    return CharacteristicsSolution(
        zetas=z_arr, tau=tau_arr, xi=xi, theta=th, a_factor=af, dxi_dtau=dx
    )


def characteristics_residual(
    zeta: float, tau, xi, profiles: EntranceProfiles, params: MediumParams
):
    """Residual of the bookkeeping equation at a proposed xi (for verification)."""
    return _residual(profiles, params, np.asarray(xi, float), np.asarray(tau, float), zeta)
