"""Semiclassical approximations: actions, correction bounds, and their limits."""
from __future__ import annotations

import math

import numpy as np
import pytest

from qgspectra.edge import edge_profile, transition_matrix
from qgspectra.errors import InputError, NumericalError, TurningPointError
from qgspectra.orbits import make_orbit, orbit_weight, wigner_delay
from qgspectra.wkb import (
    compare_with_exact,
    semiclassical_trace_data,
    wkb_correction,
    wkb_profile,
    wkb_solution,
    wkb_transition,
    wkb_wigner_delay,
)

from .oracles import smooth_action

KS_DOUBLING = (10.0, 20.0, 40.0, 80.0)


def test_action_matches_quadrature(g_smooth):
    for k in KS_DOUBLING:
        data = wkb_solution(g_smooth, 0, k)
        expected = smooth_action(lambda x: 2.0 * math.cos(3.0 * x), 1.0, k)
        assert data.action == pytest.approx(expected, abs=1e-10)
        assert data.action_error <= 1e-10


def test_action_for_zero_potential_is_kL(g_interval_pi):
    data = wkb_solution(g_interval_pi, 0, 4.0)
    assert data.action == pytest.approx(4.0 * math.pi, abs=1e-12)


def test_action_for_constant_potential_is_exact(g_const):
    k = 5.0
    data = wkb_solution(g_const, 0, k)
    assert data.action == pytest.approx(math.pi * math.sqrt(k * k - 4.0), abs=1e-12)


def test_first_correction_decays_quadratically(g_smooth):
    sups = [wkb_correction(g_smooth, 0, k, 1) for k in KS_DOUBLING]
    for a, b in zip(sups, sups[1:]):
        assert 6.0 <= a / b <= 10.0


def test_second_correction_is_much_smaller(g_smooth):
    e1 = wkb_correction(g_smooth, 0, 10.0, 1)
    e2 = wkb_correction(g_smooth, 0, 10.0, 2)
    assert e2 < 1e-2 * e1


def test_correction_order_is_validated(g_smooth):
    for j in (0, 3):
        with pytest.raises(InputError):
            wkb_correction(g_smooth, 0, 10.0, j)


def test_profile_deviation_shrinks_like_k_squared(g_smooth):
    for k in KS_DOUBLING:
        d = compare_with_exact(g_smooth, 0, k)
        assert 0.5 <= k * k * d["deviation"] <= 2.0
        assert d["corrected_deviation"] <= d["deviation"]
        assert d["matched_deviation"] <= 0.1 * d["deviation"]
        assert d["matched_corrected_deviation"] <= 1e-2 * d["matched_deviation"]


def test_profile_helper_agrees_with_report(g_smooth):
    k = 40.0
    xs = np.linspace(0.0, 1.0, 513)
    exact = edge_profile(g_smooth, 0, k, xs)
    plain = wkb_profile(g_smooth, 0, k, xs)
    dev = float(np.max(np.abs(exact - plain)))
    report = compare_with_exact(g_smooth, 0, k)
    assert dev == pytest.approx(report["deviation"], rel=1e-9)
    corrected = wkb_profile(g_smooth, 0, k, xs, corrected=True)
    dev_corr = float(np.max(np.abs(exact - corrected)))
    assert dev_corr == pytest.approx(report["corrected_deviation"], rel=1e-9)


def test_transition_matrix_gap_is_order_k_minus_two(g_smooth):
    defects = []
    for k in KS_DOUBLING:
        gap = np.max(
            np.abs(wkb_transition(g_smooth, 0, k).matrix - transition_matrix(g_smooth, 0, k).matrix)
        )
        defects.append(float(gap))
        assert k * k * gap <= 2.5
    assert defects[-1] < defects[0]


def test_semiclassical_weight_converges_to_paired_exact_weight(g_smooth_star):
    p = make_orbit(g_smooth_star, [0, 1])
    gaps = []
    for k in (6.0, 12.0, 24.0, 48.0):
        data = semiclassical_trace_data(p, g_smooth_star, k)
        w = orbit_weight(p, g_smooth_star, k)
        gaps.append(abs(data.estimate - 2.0 * w.real))
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] <= 1e-4


def test_semiclassical_data_fields(g_smooth_star):
    p = make_orbit(g_smooth_star, [0, 1])
    data = semiclassical_trace_data(p, g_smooth_star, 12.0)
    assert data.amplitude == pytest.approx(1.0 / 3.0)
    assert data.backscatter_count == 1
    assert data.repetitions == 1
    assert 1.9 < data.period < 2.1


def test_semiclassical_data_requires_transmission_orbits(g_delta_star):
    p = make_orbit(g_delta_star, [0, 0])
    assert "reflect" in p.kinds
    with pytest.raises(InputError, match="transmission-only"):
        semiclassical_trace_data(p, g_delta_star, 9.0)


def test_delay_approximation_improves_with_k(g_smooth_star):
    gaps = [
        abs(wigner_delay(g_smooth_star, k) - wkb_wigner_delay(g_smooth_star, k))
        for k in (5.0, 10.0, 20.0, 40.0)
    ]
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] <= 1e-6


def test_non_contracting_expansion_is_refused(g_divergent):
    with pytest.raises(NumericalError, match="not contract"):
        wkb_correction(g_divergent, 0, 7.2, 1)
    with pytest.raises(NumericalError, match="does not contract"):
        wkb_solution(g_divergent, 0, 7.2)
    with pytest.raises(NumericalError, match="does not contract"):
        compare_with_exact(g_divergent, 0, 7.2)


def test_turning_points_are_refused(g_smooth):
    with pytest.raises(TurningPointError, match="does not clear"):
        wkb_solution(g_smooth, 0, 1.5)


def test_point_interactions_are_refused(g_delta_star):
    with pytest.raises(InputError, match="point interaction"):
        wkb_solution(g_delta_star, 0, 5.0)
