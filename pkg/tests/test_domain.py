import math

import numpy as np
import pytest
from scipy import constants as const

import bstirap as bs
from bstirap.errors import EntranceWindowError, GridError


class TestMakeGrid:
    def test_single_entrance_slice(self):
        g = bs.make_grid(-6, 6, 13, 0, 1)
        assert g.dtau == pytest.approx(1.0)
        assert g.dzeta == 0.0
        assert g.tau[0] == -6 and g.tau[-1] == 6

    def test_figure_grid_spacing(self):
        g = bs.make_grid(-8, 8, 4096, 20, 4000)
        assert g.dzeta == pytest.approx(0.005)
        assert g.dtau == pytest.approx(16 / 4095)

    def test_inverted_bounds(self):
        with pytest.raises(GridError):
            bs.make_grid(6, -6, 13, 0, 1)

    @pytest.mark.parametrize(
        "args",
        [
            (-6, 6, 1, 0, 1),
            (-6, 6, 13, 0, 0),
            (np.nan, 6, 13, 0, 1),
            (-6, 6, 13, -1.0, 1),
        ],
    )
    def test_bad_construction(self, args):
        with pytest.raises(GridError):
            bs.make_grid(*args)

    def test_grids_are_immutable(self):
        g = bs.make_grid(-6, 6, 13, 0, 1)
        with pytest.raises(ValueError):
            g.tau[0] = 0.0


class TestGaussianEntrance:
    def test_generalized_peak_normalisation(self):
        # Oracle: recover the common amplitude exactly from one grid sample,
        # then maximise the analytic pair envelope on a dense grid.
        spec = bs.InputPulseSpec(omega0T=40.0, delay_over_T=1.3)
        sl = bs.gaussian_entrance(spec, bs.make_grid(-8, 8, 257, 0, 1))
        i = int(np.argmin(np.abs(sl.tau + 0.65)))
        amp = sl.omega_p[i] / math.exp(-((sl.tau[i] + 0.65) ** 2))

        tau = np.linspace(-4, 4, 4_000_001)
        dense = amp * np.hypot(
            np.exp(-((tau + 0.65) ** 2)), np.exp(-((tau - 0.65) ** 2))
        )
        assert dense.max() == pytest.approx(40.0, rel=1e-6)

    def test_split_peak_amplitudes(self):
        spec = bs.InputPulseSpec(peak_convention="split")
        grid = bs.make_grid(-8, 8, 4097, 0, 1)
        sl = bs.gaussian_entrance(spec, grid)
        i = int(np.argmin(np.abs(sl.tau + 0.65)))
        amp = sl.omega_p[i] / math.exp(-((sl.tau[i] + 0.65) ** 2))
        assert amp == pytest.approx(40.0 / math.sqrt(2.0), rel=1e-12)

    def test_mirror_symmetry(self):
        grid = bs.make_grid(-8, 8, 4097, 0, 1)  # odd count: symmetric grid
        sl = bs.gaussian_entrance(bs.InputPulseSpec(), grid)
        np.testing.assert_allclose(sl.omega_s, sl.omega_p[::-1], rtol=0, atol=1e-12)

    def test_intuitive_ordering_theta_limits(self):
        grid = bs.make_grid(-8, 8, 2048, 0, 1)
        sl = bs.gaussian_entrance(bs.InputPulseSpec(), grid)
        theta, _, _ = bs.mixing_angles(sl.omega_p, sl.omega_s, 40.0)
        assert theta[0] == pytest.approx(np.pi / 2, abs=1e-6)
        assert theta[-1] == pytest.approx(0.0, abs=1e-6)
        assert np.all(np.diff(theta) < 0)

    def test_counterintuitive_ordering_swaps_centers(self):
        grid = bs.make_grid(-8, 8, 2048, 0, 1)
        sl = bs.gaussian_entrance(bs.InputPulseSpec(ordering="counterintuitive"), grid)
        tau = grid.tau
        assert tau[np.argmax(sl.omega_p)] > 0 > tau[np.argmax(sl.omega_s)]

    def test_window_too_narrow(self):
        with pytest.raises(EntranceWindowError):
            bs.gaussian_entrance(bs.InputPulseSpec(), bs.make_grid(-3, 3, 256, 0, 1))

    def test_phases_zero(self):
        sl = bs.gaussian_entrance(bs.InputPulseSpec(), bs.make_grid(-8, 8, 512, 0, 1))
        assert not sl.phi_p.any() and not sl.phi_s.any()


class TestSpecValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(omega0T=0.0),
            dict(omega0T=-3.0),
            dict(delay_over_T=0.0),
            dict(width_over_T=-1.0),
            dict(ordering="simultaneous"),
            dict(peak_convention="other"),
        ],
    )
    def test_bad_pulse_spec(self, kwargs):
        with pytest.raises(ValueError):
            bs.InputPulseSpec(**kwargs)

    @pytest.mark.parametrize(
        "kwargs",
        [dict(q=0.0), dict(q=-1.0), dict(q=1.0, delta_p0=0.0), dict(q=1.0, delta_p0=-40.0)],
    )
    def test_bad_medium(self, kwargs):
        with pytest.raises(ValueError):
            bs.MediumParams(**kwargs)

    def test_field_slice_rejects_negative_amplitudes(self):
        tau = np.linspace(-1, 1, 5)
        z = np.zeros(5)
        with pytest.raises(ValueError):
            bs.FieldSlice(tau=tau, omega_p=z - 1.0, omega_s=z, phi_p=z, phi_s=z)

    def test_field_slice_rejects_length_mismatch(self):
        tau = np.linspace(-1, 1, 5)
        z = np.zeros(5)
        with pytest.raises(ValueError):
            bs.FieldSlice(tau=tau, omega_p=np.zeros(4), omega_s=z, phi_p=z, phi_s=z)


class TestPhysicalUnits:
    VAPOR = dict(n_cm3=1e13, omega_rad_s=1e15, dipole_cgs=0.8e-17, duration_s=1e-9)

    def test_depth_scale_vapor_estimate(self):
        pu = bs.physical_units(**self.VAPOR)
        assert pu.cm_per_unit_zeta == pytest.approx(0.05, rel=0.10)

    def test_coupling_against_direct_constant_evaluation(self):
        # Independent oracle: CODATA constants converted to cgs by hand.
        pu = bs.physical_units(**self.VAPOR)
        hbar_cgs = const.hbar * 1e7
        c_cgs = const.c * 1e2
        q_expect = 2 * math.pi * 1e15 * (0.8e-17) ** 2 / (hbar_cgs * c_cgs)
        assert pu.q_cgs == pytest.approx(q_expect, rel=1e-12)

    def test_doubling_density_halves_depth_unit(self):
        pu1 = bs.physical_units(**self.VAPOR)
        pu2 = bs.physical_units(**{**self.VAPOR, "n_cm3": 2e13})
        assert pu2.cm_per_unit_zeta == pytest.approx(pu1.cm_per_unit_zeta / 2, rel=1e-12)

    def test_exact_inverse_scaling(self):
        pu = bs.physical_units(**self.VAPOR)
        assert pu.cm_per_unit_zeta * pu.q_cgs * 1e13 * 1e-9 == pytest.approx(
            2 * math.pi, rel=1e-12
        )

    def test_echoes_inputs(self):
        pu = bs.physical_units(**self.VAPOR)
        assert (pu.n_cm3, pu.omega_rad_s, pu.dipole_cgs, pu.duration_s) == (
            1e13,
            1e15,
            0.8e-17,
            1e-9,
        )

    @pytest.mark.parametrize("field", ["n_cm3", "omega_rad_s", "dipole_cgs", "duration_s"])
    def test_rejects_nonpositive(self, field):
        with pytest.raises(ValueError):
            bs.physical_units(**{**self.VAPOR, field: 0.0})
