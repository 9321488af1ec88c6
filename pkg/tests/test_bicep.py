"""Tests for the bicep linkage: triangle kinematics, statics, and fitting.

Oracle strategy: the forward triangle is exercised against closed-form
boundary poses and a central-difference slope check; the fitter is
checked against synthetic data it must recover exactly, against the
unpolished grid scan it must never lose to, and against an independent
one-dimensional reduction of the measured-pair problem (whose optimum
rides the fully-folded boundary b - a = min length).
"""

import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from tsakit.bicep import (
    CONSISTENCY_LIMIT_DEG,
    BicepFit,
    BicepGeometry,
    angle_from_length,
    bicep_grid_oracle,
    dlength_dangle,
    elbow_angle,
    fit_bicep,
    gravity_torque,
    length_from_angle,
    string_tension,
    sweep,
)
from tsakit.errors import (
    ParameterError,
    SingularConfigurationError,
    TriangleRangeError,
    UnderdeterminedError,
)
from tsakit.model import LoadCase, Material, StringSpec, TwoPhaseParams
from tsakit.units import grams_to_newtons, rev_to_rad

GEOM = BicepGeometry(a=83.0, b=151.0, gamma=142.5, payload=500.0, forearm_length=120.0)

# Measured (string length mm, bending angle deg) pairs of the testbed arm.
PAIRS = [(215.0, 13.1), (135.0, 73.4), (68.0, 147.1)]


def boundary_oracle(pairs):
    """Independent 1-d solution of the measured-pair fit.

    The least-squares optimum sits on the fully folded boundary
    b - a = min(lengths) (the shortest observation closes the triangle
    flat), which reduces the problem to one variable: fix b = a + l_min,
    take the closed-form optimal gamma = mean(elbow_k + angle_k), and
    minimize the remaining SSE over a alone with a scalar method.
    """
    lengths = np.array([l for l, _ in pairs])
    angles = np.array([phi for _, phi in pairs])
    l_min = lengths.min()

    def sse_of_a(a):
        b = a + l_min
        c = (a * a + b * b - lengths**2) / (2.0 * a * b)
        elbow = np.degrees(np.arccos(np.clip(c, -1.0, 1.0)))
        gamma = float(np.mean(elbow + angles))
        err = (gamma - elbow) - angles
        return float(np.sum(err * err))

    result = minimize_scalar(
        sse_of_a, bounds=(l_min + 1.0, 200.0), method="bounded",
        options={"xatol": 1e-8},
    )
    return float(result.x), float(result.fun)


class TestTriangleKinematics:
    def test_round_trip_over_admissible_interval(self):
        lo, hi = GEOM.admissible_lengths
        for l in np.linspace(lo + 0.5, hi - 0.5, 100):
            phi = angle_from_length(GEOM, float(l))
            assert length_from_angle(GEOM, phi) == pytest.approx(float(l), abs=1e-9)

    def test_admissible_interval_is_triangle_inequality(self):
        assert GEOM.admissible_lengths == (abs(GEOM.a - GEOM.b), GEOM.a + GEOM.b)

    def test_fully_extended_and_fully_folded_poses(self):
        # String spanning a + b opens the elbow flat; string equal to
        # b - a folds it shut.
        assert elbow_angle(GEOM, GEOM.a + GEOM.b) == pytest.approx(180.0, abs=1e-9)
        assert elbow_angle(GEOM, GEOM.b - GEOM.a) == pytest.approx(0.0, abs=1e-9)
        assert angle_from_length(GEOM, GEOM.a + GEOM.b) == pytest.approx(
            GEOM.gamma - 180.0, abs=1e-9
        )
        assert angle_from_length(GEOM, GEOM.b - GEOM.a) == pytest.approx(
            GEOM.gamma, abs=1e-9
        )

    def test_angle_strictly_decreasing_in_length(self):
        lo, hi = GEOM.admissible_lengths
        lengths = np.linspace(lo, hi, 200)
        angles = [angle_from_length(GEOM, float(l)) for l in lengths]
        assert np.all(np.diff(angles) < 0.0)

    def test_out_of_range_length_reports_interval(self):
        with pytest.raises(TriangleRangeError) as excinfo:
            elbow_angle(GEOM, GEOM.a + GEOM.b + 1.0)
        assert excinfo.value.lo == pytest.approx(GEOM.b - GEOM.a)
        assert excinfo.value.hi == pytest.approx(GEOM.a + GEOM.b)
        with pytest.raises(TriangleRangeError):
            elbow_angle(GEOM, GEOM.b - GEOM.a - 1.0)

    def test_out_of_range_angle_reports_interval(self):
        with pytest.raises(TriangleRangeError) as excinfo:
            length_from_angle(GEOM, GEOM.gamma + 1.0)
        assert excinfo.value.lo == pytest.approx(GEOM.gamma - 180.0)
        assert excinfo.value.hi == pytest.approx(GEOM.gamma)
        with pytest.raises(TriangleRangeError):
            length_from_angle(GEOM, GEOM.gamma - 181.0)

    def test_rejects_degenerate_geometry(self):
        with pytest.raises(ParameterError):
            BicepGeometry(a=0.0, b=150.0, gamma=140.0)
        with pytest.raises(ParameterError):
            BicepGeometry(a=80.0, b=150.0, gamma=140.0, payload=-1.0)


class TestSlopeAndStatics:
    @pytest.mark.parametrize("angle", [20.0, 60.0, 100.0, 130.0])
    def test_analytic_slope_matches_central_difference(self, angle):
        h = 1e-3
        fd = (
            length_from_angle(GEOM, angle + h) - length_from_angle(GEOM, angle - h)
        ) / (2.0 * h)
        assert dlength_dangle(GEOM, angle) == pytest.approx(fd, rel=1e-6)

    @pytest.mark.parametrize("angle", [20.0, 60.0, 100.0, 130.0])
    def test_virtual_work_balance(self, angle):
        # Tension times string-side displacement rate equals the gravity
        # moment (per radian of joint motion).
        tension = string_tension(GEOM, angle)
        slope_per_rad = abs(dlength_dangle(GEOM, angle)) * 180.0 / math.pi
        assert tension * slope_per_rad == pytest.approx(
            gravity_torque(GEOM, angle), rel=1e-12
        )

    def test_tension_drops_as_the_arm_flexes(self):
        # Tension scales with string length, so the flexed pose needs
        # less pull than the extended one.
        assert string_tension(GEOM, 130.0) < string_tension(GEOM, 20.0)

    def test_tension_proportional_to_payload_and_zero_without(self):
        unloaded = BicepGeometry(a=83.0, b=151.0, gamma=142.5, forearm_length=120.0)
        assert string_tension(unloaded, 60.0) == 0.0
        doubled = BicepGeometry(
            a=83.0, b=151.0, gamma=142.5, payload=1000.0, forearm_length=120.0
        )
        assert string_tension(doubled, 60.0) == pytest.approx(
            2.0 * string_tension(GEOM, 60.0), rel=1e-12
        )

    def test_singular_poses_rejected(self):
        # Fully folded and fully extended, the string line passes
        # through the joint and the moment balance degenerates.
        with pytest.raises(SingularConfigurationError):
            string_tension(GEOM, GEOM.gamma)
        with pytest.raises(SingularConfigurationError):
            string_tension(GEOM, GEOM.gamma - 180.0)

    def test_tension_formula_closed_form(self):
        angle = 60.0
        l = length_from_angle(GEOM, angle)
        expected = grams_to_newtons(GEOM.payload) * GEOM.forearm_length * l / (
            GEOM.a * GEOM.b
        )
        assert string_tension(GEOM, angle) == pytest.approx(expected, rel=1e-15)


class TestFitBicep:
    def test_recovers_generating_geometry(self):
        truth = BicepGeometry(a=80.0, b=150.0, gamma=140.0)
        angles = [10.0, 40.0, 70.0, 100.0, 130.0]
        pairs = [(length_from_angle(truth, phi), phi) for phi in angles]
        fit = fit_bicep(pairs)
        assert isinstance(fit, BicepFit)
        assert fit.consistent
        assert fit.sse_deg2 < 1e-10
        assert fit.geometry.a == pytest.approx(truth.a, rel=1e-3)
        assert fit.geometry.b == pytest.approx(truth.b, rel=1e-3)
        assert fit.geometry.gamma == pytest.approx(truth.gamma, rel=1e-3)
        assert max(abs(e) for e in fit.errors_deg) < 1e-4

    def test_canonicalizes_arm_order(self):
        truth = BicepGeometry(a=80.0, b=150.0, gamma=140.0)
        angles = [10.0, 40.0, 70.0, 100.0, 130.0]
        pairs = [(length_from_angle(truth, phi), phi) for phi in angles]
        fit = fit_bicep(pairs)
        assert fit.geometry.a <= fit.geometry.b

    def test_requires_three_distinct_lengths(self):
        with pytest.raises(UnderdeterminedError):
            fit_bicep([(215.0, 13.1), (135.0, 73.4)])
        with pytest.raises(UnderdeterminedError):
            fit_bicep([(215.0, 13.1), (215.0, 14.0), (135.0, 73.4)])

    def test_rejects_nonpositive_lengths(self):
        with pytest.raises(ParameterError):
            fit_bicep([(215.0, 13.1), (-135.0, 73.4), (68.0, 147.1)])

    def test_measured_pairs_are_inconsistent_with_rigid_linkage(self):
        fit = fit_bicep(PAIRS, payload=500.0, forearm_length=120.0)
        assert not fit.consistent
        assert max(abs(e) for e in fit.errors_deg) > CONSISTENCY_LIMIT_DEG
        assert max(abs(e) for e in fit.errors_deg) == pytest.approx(6.354, abs=0.01)
        # Payload and forearm pass through to the fitted geometry.
        assert fit.geometry.payload == 500.0
        assert fit.geometry.forearm_length == 120.0

    def test_measured_pairs_match_boundary_oracle(self):
        # The optimum rides the fully folded boundary: the 68 mm
        # observation closes the triangle flat, so b - a pins to it.
        fit = fit_bicep(PAIRS)
        a_star, sse_star = boundary_oracle(PAIRS)
        assert fit.geometry.b - fit.geometry.a == pytest.approx(68.0, abs=1e-6)
        assert fit.geometry.a == pytest.approx(a_star, abs=1e-3)
        assert fit.sse_deg2 == pytest.approx(sse_star, abs=1e-6)
        assert fit.sse_deg2 == pytest.approx(64.5859, abs=0.01)

    def test_fit_never_loses_to_grid_scan(self):
        (a, b, gamma), grid_sse = bicep_grid_oracle(PAIRS)
        assert (a, b, gamma) == (84.0, 152.0, 142.0)
        assert grid_sse == pytest.approx(67.8046054199, rel=1e-9)
        fit = fit_bicep(PAIRS)
        assert fit.sse_deg2 <= grid_sse


class TestSweep:
    def test_angle_monotone_and_matches_composition(self):
        spec = StringSpec(
            diameter=1.3, initial_length=214.3, material=Material.STIFF, ply=1
        )
        params = TwoPhaseParams(
            r_eff=0.86,
            theta_star=rev_to_rad(28.0),
            coil_diameter=4.3,
            coil_pitch=2.6,
            eta=0.11,
        )
        load = LoadCase(mass=2900.0)
        geom = BicepGeometry(a=83.0, b=151.0, gamma=142.5)
        theta_values = np.linspace(0.0, 30.0, 61)
        trajectory = sweep(geom, spec, params, load, theta_values)
        angles = np.array([phi for _, phi in trajectory])
        assert np.all(np.diff(angles) >= 0.0)
        from tsakit.model import length

        for theta_rev, phi in trajectory[:: 10]:
            l = length(spec, params, load, rev_to_rad(theta_rev))
            assert phi == pytest.approx(angle_from_length(geom, l), abs=1e-12)
