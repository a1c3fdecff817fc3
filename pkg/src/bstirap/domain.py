"""Dimensionless unit conventions, grids, and entrance-condition construction.

Conventions used throughout the package:

* local time ``tau`` is measured in units of the pulse duration T,
* Rabi frequencies are exported as the dimensionless products  Omega*T,
* one- and two-photon detunings likewise as  Delta_p*T  and  delta*T,
* the propagation depth is  zeta = q_s * z * N * T  (dimensionless), where
  N is the atomic number density and q_s the Stokes-transition coupling.

With these choices the envelope equations read
``d(Omega_p T)/d zeta = -q * Im(a1* a2)`` and
``d(Omega_s T)/d zeta = -Im(a3* a2)`` with ``q = q_p/q_s`` the only medium
asymmetry parameter entering the dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as _const
from scipy.optimize import minimize_scalar

from .errors import EntranceWindowError, GridError

__all__ = [
    "MediumParams",
    "SimulationGrid",
    "InputPulseSpec",
    "FieldSlice",
    "PhysicalUnits",
    "make_grid",
    "gaussian_entrance",
    "physical_units",
    "ENVELOPE_FLOOR_DEFAULT",
]

#: Default relative floor below which entrance envelopes must have decayed
#: at the window boundaries.
ENVELOPE_FLOOR_DEFAULT = 1e-8

_ORDERINGS = ("intuitive", "counterintuitive")
_PEAK_CONVENTIONS = ("generalized", "split")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MediumParams:
    """Medium parameters in dimensionless form.

    The two oscillator strengths are stored as the ratio ``q = q_p/q_s``
    together with the reference value ``q_s``; the atomic density is absorbed
    into the depth unit ``zeta`` and never appears explicitly (see
    :func:`physical_units` for the conversion back to centimetres).

    Parameters
    ----------
    q : float
        Ratio of pump to Stokes transition strength, ``q_p/q_s``. Must be > 0.
    delta_p0 : float
        One-photon detuning at the entrance, times T.  Must be > 0; the
        bright-state transfer mechanism requires a definite sign and the
        positive branch is used throughout.
    delta_two0 : float
        Two-photon detuning at the entrance, times T (default 0).
    q_s : float
        Reference Stokes coupling.  Dynamics depend on it only through
        ``q``; it is kept so diagnostics can be reported in raw units.
    """

    q: float
    delta_p0: float = 40.0
    delta_two0: float = 0.0
    q_s: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.q) and self.q > 0.0):
            raise ValueError(f"oscillator-strength ratio q must be positive, got {self.q}")
        if not (math.isfinite(self.q_s) and self.q_s > 0.0):
            raise ValueError(f"reference coupling q_s must be positive, got {self.q_s}")
        if not (math.isfinite(self.delta_p0) and self.delta_p0 > 0.0):
            raise ValueError(
                f"one-photon detuning delta_p0 must be positive, got {self.delta_p0}"
            )
        if not math.isfinite(self.delta_two0):
            raise ValueError("two-photon detuning delta_two0 must be finite")

    @property
    def q_p(self) -> float:
        return self.q * self.q_s


@dataclass(frozen=True)
class SimulationGrid:
    """Uniform tau grid (n_tau samples) and depth discretisation (n_zeta steps)."""

    tau_min: float
    tau_max: float
    n_tau: int
    zeta_max: float
    n_zeta: int
    tau: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("tau_min", "tau_max", "zeta_max"):
            if not math.isfinite(getattr(self, name)):
                raise GridError(f"{name} must be finite")
        if not self.tau_min < self.tau_max:
            raise GridError(
                f"tau bounds must be increasing, got [{self.tau_min}, {self.tau_max}]"
            )
        if int(self.n_tau) != self.n_tau or self.n_tau < 2:
            raise GridError(f"n_tau must be an integer >= 2, got {self.n_tau}")
        if int(self.n_zeta) != self.n_zeta or self.n_zeta < 1:
            raise GridError(f"n_zeta must be an integer >= 1, got {self.n_zeta}")
        if self.zeta_max < 0.0:
            raise GridError(f"zeta_max must be >= 0, got {self.zeta_max}")
        object.__setattr__(self, "n_tau", int(self.n_tau))
        object.__setattr__(self, "n_zeta", int(self.n_zeta))
        object.__setattr__(
            self, "tau", _readonly(np.linspace(self.tau_min, self.tau_max, self.n_tau))
        )

    @property
    def dtau(self) -> float:
        return (self.tau_max - self.tau_min) / (self.n_tau - 1)

    @property
    def dzeta(self) -> float:
        return self.zeta_max / self.n_zeta


def make_grid(
    tau_min: float, tau_max: float, n_tau: int, zeta_max: float, n_zeta: int
) -> SimulationGrid:
    """Build a uniform simulation grid; raises :class:`GridError` on bad input."""
    return SimulationGrid(tau_min, tau_max, n_tau, zeta_max, n_zeta)


@dataclass(frozen=True)
class InputPulseSpec:
    """Entrance Gaussian pulse pair.

    ``omega0T`` is the peak of the generalized Rabi frequency
    ``Omega = sqrt(Omega_p^2 + Omega_s^2)`` times T.  Envelopes are
    ``exp(-((tau -/+ delay/2) / width)^2)`` (1/e half-width ``width``, in
    units of T), pump centred earlier for the intuitive ordering.

    ``peak_convention`` selects how the common amplitude is normalised:

    * ``"generalized"`` (default): the peak over tau of the generalized Rabi
      frequency equals ``omega0T`` exactly.
    * ``"split"``: each pulse carries peak amplitude ``omega0T/sqrt(2)``; the
      quadrature sum would reach ``omega0T`` only for fully overlapped
      pulses.  Used by the photon-budget estimates, where the pulse-pair
      energy rather than the instantaneous peak is the relevant quantity.
    """

    omega0T: float = 40.0
    delay_over_T: float = 1.3
    width_over_T: float = 1.0
    ordering: str = "intuitive"
    peak_convention: str = "generalized"

    def __post_init__(self):
        if not (math.isfinite(self.omega0T) and self.omega0T > 0.0):
            raise ValueError(f"omega0T must be positive, got {self.omega0T}")
        if not (math.isfinite(self.width_over_T) and self.width_over_T > 0.0):
            raise ValueError(f"width_over_T must be positive, got {self.width_over_T}")
        if self.ordering not in _ORDERINGS:
            raise ValueError(f"ordering must be one of {_ORDERINGS}, got {self.ordering!r}")
        if self.peak_convention not in _PEAK_CONVENTIONS:
            raise ValueError(
                f"peak_convention must be one of {_PEAK_CONVENTIONS}, got {self.peak_convention!r}"
            )
        if not (math.isfinite(self.delay_over_T) and self.delay_over_T > 0.0):
            raise ValueError(
                f"delay_over_T must be positive, got {self.delay_over_T}"
            )

    @property
    def pump_center(self) -> float:
        return -0.5 * self.delay_over_T if self.ordering == "intuitive" else 0.5 * self.delay_over_T

    @property
    def stokes_center(self) -> float:
        return -self.pump_center


@dataclass(frozen=True)
class FieldSlice:
    """Pump/Stokes envelope amplitudes (x T) and phases over the tau grid.

    Amplitudes are nonnegative moduli; phases are kept unwrapped along tau by
    every producer in this package so that finite differences of the phases
    are meaningful.
    """

    tau: np.ndarray
    omega_p: np.ndarray
    omega_s: np.ndarray
    phi_p: np.ndarray
    phi_s: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.tau).size
        for name in ("tau", "omega_p", "omega_s", "phi_p", "phi_s"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 1 or a.size != n:
                raise ValueError(f"{name} must be a 1-d array of length {n}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, _readonly(a))
        if np.any(self.omega_p < 0.0) or np.any(self.omega_s < 0.0):
            raise ValueError("envelope amplitudes must be nonnegative")

    @property
    def n_tau(self) -> int:
        return self.tau.size

    def complex_envelopes(self) -> tuple[np.ndarray, np.ndarray]:
        """Return the complex envelopes ``Omega * exp(i phi)`` for both pulses."""
        return (
            self.omega_p * np.exp(1j * self.phi_p),
            self.omega_s * np.exp(1j * self.phi_s),
        )


def _pair_peak_sq(spec: InputPulseSpec) -> float:
    """Peak over tau of e_p^2 + e_s^2 for unit-amplitude envelopes."""
    h = 0.5 * spec.delay_over_T
    w = spec.width_over_T

    def neg(tau):
        return -(
            np.exp(-2.0 * ((tau + h) / w) ** 2) + np.exp(-2.0 * ((tau - h) / w) ** 2)
        )

    # Symmetric double Gaussian: maxima lie in [-h, h].
    res = minimize_scalar(neg, bounds=(-h, h), method="bounded", options={"xatol": 1e-13})
    best = -res.fun
    # Guard the separated-pulse case where the maximizer sits at the bound.
    best = max(best, -neg(np.array(0.0)), -neg(np.array(h)), -neg(np.array(-h)))
    return float(best)


def gaussian_entrance(
    spec: InputPulseSpec,
    grid: SimulationGrid,
    envelope_floor: float = ENVELOPE_FLOOR_DEFAULT,
) -> FieldSlice:
    """Entrance field slice at zeta = 0 for a Gaussian pulse pair.

    Raises :class:`EntranceWindowError` when either envelope exceeds
    ``envelope_floor`` (relative to its own peak) at a window boundary: the
    initial condition a = (1, 0, 0) at tau_min is meaningful only for pulses
    that are fully contained in the window.
    """
    tau = grid.tau
    w = spec.width_over_T
    cp, cs = spec.pump_center, spec.stokes_center

    ep = np.exp(-(((tau - cp) / w) ** 2))
    es = np.exp(-(((tau - cs) / w) ** 2))

    for name, c in (("pump", cp), ("stokes", cs)):
        edge = max(
            math.exp(-(((grid.tau_min - c) / w) ** 2)),
            math.exp(-(((grid.tau_max - c) / w) ** 2)),
        )
        if edge > envelope_floor:
            raise EntranceWindowError(
                f"{name} envelope is {edge:.3e} of peak at the window boundary "
                f"(floor {envelope_floor:.1e}); widen [tau_min, tau_max]"
            )

    if spec.peak_convention == "generalized":
        amp = spec.omega0T / math.sqrt(_pair_peak_sq(spec))
    else:  # "split"
        amp = spec.omega0T / math.sqrt(2.0)

    zeros = np.zeros_like(tau)
    return FieldSlice(tau=tau, omega_p=amp * ep, omega_s=amp * es, phi_p=zeros, phi_s=zeros)


@dataclass(frozen=True)
class PhysicalUnits:
    """Conversion record between the dimensionless depth and lab units."""

    q_cgs: float
    cm_per_unit_zeta: float
    n_cm3: float
    omega_rad_s: float
    dipole_cgs: float
    duration_s: float


def physical_units(
    n_cm3: float, omega_rad_s: float, dipole_cgs: float, duration_s: float
) -> PhysicalUnits:
    """Convert vapor parameters to the coupling constant and depth scale.

    ``q_cgs = 2 pi omega d^2 / (hbar c)`` (cm^2/s) is the coupling entering
    the photon-flux normalisation ``n = Omega^2 / q``.  The length of one
    unit of dimensionless depth is ``cm_per_unit_zeta = hbar c /
    (omega d^2 N T) = 2 pi / (q_cgs N T)``: the depth unit absorbs the
    angular-frequency factor of 2 pi.
    """
    vals = {
        "n_cm3": n_cm3,
        "omega_rad_s": omega_rad_s,
        "dipole_cgs": dipole_cgs,
        "duration_s": duration_s,
    }
    for name, v in vals.items():
        if not (math.isfinite(v) and v > 0.0):
            raise ValueError(f"{name} must be positive, got {v}")

    hbar_cgs = _const.hbar * 1e7  # J s -> erg s
    c_cgs = _const.c * 1e2  # m/s -> cm/s
    q_cgs = 2.0 * math.pi * omega_rad_s * dipole_cgs**2 / (hbar_cgs * c_cgs)
    cm_per_unit_zeta = 2.0 * math.pi / (q_cgs * n_cm3 * duration_s)
    return PhysicalUnits(
        q_cgs=q_cgs,
        cm_per_unit_zeta=cm_per_unit_zeta,
        n_cm3=n_cm3,
        omega_rad_s=omega_rad_s,
        dipole_cgs=dipole_cgs,
        duration_s=duration_s,
    )
