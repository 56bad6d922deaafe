"""Unit tests for the control-graph distance estimator."""

import numpy as np
import pytest

from carnotpde import cc_distance_estimate, preset
from carnotpde.errors import NoPathError


class TestBasics:
    def test_coincident_points(self):
        for name in ("euclidean:2", "heisenberg1"):
            s = preset(name)
            assert cc_distance_estimate(s, np.zeros(s.n), np.zeros(s.n), 0.1) == 0.0

    def test_euclidean_axis_segment(self):
        d = cc_distance_estimate(preset("euclidean:2"), [0, 0], [1, 0], 0.05)
        assert d == pytest.approx(1.0, abs=0.05)

    def test_heisenberg_horizontal_segment(self):
        d = cc_distance_estimate(preset("heisenberg1"), [0, 0, 0], [1, 0, 0], 0.1)
        assert d == pytest.approx(1.0, abs=0.1)

    def test_engel_horizontal_segment(self):
        # from the origin the first Engel field is the first axis direction
        d = cc_distance_estimate(preset("engel1"), [0, 0, 0, 0], [0.5, 0, 0, 0], 0.1)
        assert d == pytest.approx(0.5, abs=0.1)

    def test_endpoint_outside_box(self):
        with pytest.raises(ValueError):
            cc_distance_estimate(preset("euclidean:2"), [0, 0], [1, 0], 0.1, box=[(-0.5, 0.5)] * 2)

    def test_unreachable_goal(self):
        # the rank-one planar frame only moves along the first axis
        with pytest.raises(NoPathError):
            cc_distance_estimate(preset("line2d"), [0, 0], [0, 1], 0.1)


class TestMetricProperties:
    def test_symmetry_within_resolution(self):
        s = preset("heisenberg1")
        a = np.array([0.0, 0.0, 0.0])
        b = np.array([0.6, 0.4, 0.0])
        res = 0.1
        d_ab = cc_distance_estimate(s, a, b, res)
        d_ba = cc_distance_estimate(s, b, a, res)
        assert abs(d_ab - d_ba) <= 2.0 * res

    def test_triangle_inequality_within_two_resolutions(self):
        s = preset("heisenberg1")
        res = 0.1
        a = np.array([0.0, 0.0, 0.0])
        b = np.array([0.5, 0.0, 0.0])
        c = np.array([0.5, 0.5, 0.0])
        box = [(-1.5, 1.5)] * 3
        d_ac = cc_distance_estimate(s, a, c, res, box=box)
        d_ab = cc_distance_estimate(s, a, b, res, box=box)
        d_bc = cc_distance_estimate(s, b, c, res, box=box)
        assert d_ac <= d_ab + d_bc + 2.0 * res

    def test_refinement_does_not_increase_length(self):
        s = preset("heisenberg1")
        a = np.array([0.0, 0.0, 0.0])
        b = np.array([0.0, 0.0, 0.25])
        coarse = cc_distance_estimate(s, a, b, 0.1)
        fine = cc_distance_estimate(s, a, b, 0.05)
        assert fine <= coarse + 1e-9

    def test_vertical_square_root_scaling(self):
        s = preset("heisenberg1")
        ratios = []
        for t in (0.25, 0.5):
            d = cc_distance_estimate(s, [0, 0, 0], [0, 0, t], 0.05)
            ratios.append(d / np.sqrt(t))
        spread = (max(ratios) - min(ratios)) / np.mean(ratios)
        assert spread < 0.25

    def test_deterministic(self):
        s = preset("heisenberg1")
        d1 = cc_distance_estimate(s, [0, 0, 0], [0.4, 0.2, 0.1], 0.1)
        d2 = cc_distance_estimate(s, [0, 0, 0], [0.4, 0.2, 0.1], 0.1)
        assert d1 == d2

    def test_resolution_validation(self):
        with pytest.raises(ValueError):
            cc_distance_estimate(preset("euclidean:2"), [0, 0], [1, 0], 0.0)
