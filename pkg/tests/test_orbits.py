"""Periodic-orbit enumeration, weights, and the length-spectrum identity."""
from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from qgspectra.errors import InputError, NumericalError
from qgspectra.orbits import (
    TestFunction,
    enumerate_orbits,
    make_orbit,
    orbit_amplitude,
    orbit_sum_check,
    step_sigma,
    structural_step_matrix,
    trace_check,
    wigner_delay,
)
from qgspectra.spectrum import ScanConfig

from .oracles import brute_classes, burnside_classes, gaussian_moment


def _counts_by_length(orbits, n_max):
    out = {n: 0 for n in range(1, n_max + 1)}
    for p in orbits:
        out[p.n] += 1
    return out


def test_structural_matrix_shape_and_trace(g_triangle, g_interval_delta_pi):
    a_tri = structural_step_matrix(g_triangle)
    assert a_tri.shape == (6, 6)
    assert np.trace(a_tri) == 0  # no one-step closed orbits without reflection
    a_int = structural_step_matrix(g_interval_delta_pi)
    # both directions can reflect off the interaction and return
    assert np.trace(a_int) == 2
    assert len(enumerate_orbits(g_interval_delta_pi, 1)) == 2


@pytest.mark.parametrize("fixture_name,n_max", [
    ("g_triangle", 6),
    ("g_interval_delta_pi", 6),
    ("g_interval_pi", 4),
    ("g_smooth_star", 4),
])
def test_class_counts_match_brute_force_and_burnside(request, fixture_name, n_max):
    g = request.getfixturevalue(fixture_name)
    adj = structural_step_matrix(g)
    counts = _counts_by_length(enumerate_orbits(g, n_max), n_max)
    for n in range(1, n_max + 1):
        brute = brute_classes(adj, n)
        assert counts[n] == brute
        assert burnside_classes(adj, n) == brute


def test_triangle_shortest_orbits(g_triangle):
    orbits = enumerate_orbits(g_triangle, 4)
    counts = _counts_by_length(orbits, 4)
    assert counts == {1: 0, 2: 0, 3: 2, 4: 0}
    for p in orbits:
        assert p.kinds == ("transmit", "transmit", "transmit")
        assert p.n_primitive == 3
        assert p.repetitions == 1


def test_repetition_bookkeeping(g_interval_pi):
    orbits = enumerate_orbits(g_interval_pi, 4)
    assert [(p.n, p.n_primitive, p.repetitions) for p in orbits] == [
        (2, 2, 1),
        (4, 2, 2),
    ]


def test_interval_amplitudes_closed_form(g_interval_pi):
    length = math.pi
    k = 2.7
    orbits = enumerate_orbits(g_interval_pi, 4)
    for p in orbits:
        traversals = p.n // 2
        expected = 2.0 * length * math.cos(2.0 * k * length * traversals)
        assert orbit_amplitude(p, g_interval_pi, k) == pytest.approx(expected, abs=1e-12)


def test_step_sigma_values(g_delta_star):
    # cross transmission at the degree-3 centre
    assert step_sigma(g_delta_star, 1, 2, "transmit") == pytest.approx(2.0 / 3.0)
    # direct bounce back through the centre
    assert step_sigma(g_delta_star, 1, 0, "transmit") == pytest.approx(-1.0 / 3.0)
    # bounce at a leaf
    assert step_sigma(g_delta_star, 0, 1, "transmit") == pytest.approx(1.0)
    # reflection off the interaction, re-entering the same edge
    assert step_sigma(g_delta_star, 0, 0, "reflect") == pytest.approx(-1.0 / 3.0)


def test_make_orbit_validates_steps(g_triangle, g_interval_delta_pi):
    with pytest.raises(InputError, match="inadmissible step"):
        make_orbit(g_triangle, [0, 0])
    p = make_orbit(g_interval_delta_pi, [0])
    assert p.kinds == ("reflect",)


def test_orbit_sum_identity(g_interval_delta_pi, g_triangle):
    for g in (g_interval_delta_pi, g_triangle):
        for n in range(1, 7):
            assert orbit_sum_check(g, 3.7, n) <= 1e-10


def test_test_function_shape():
    phi = TestFunction(10.0, 0.5, 8.0)
    assert phi(10.0) == pytest.approx(1.0)
    assert phi(10.5) == pytest.approx(math.exp(-0.5))
    assert phi.support == (6.0, 14.0)
    assert phi(20.0) < 1e-80  # support only bounds the quadrature window
    xs = np.array([9.0, 10.0, 11.0])
    np.testing.assert_allclose(phi(xs), np.exp(-((xs - 10.0) ** 2) / 0.5), rtol=0, atol=1e-15)


def test_trace_identity_on_the_interval(g_interval_pi):
    phi = TestFunction(10.0, 0.5, 8.0)
    report = trace_check(g_interval_pi, phi, 6)
    lo, hi = phi.support
    assert report.quadrature["k_lo"] == lo
    assert report.quadrature["k_hi"] == hi
    # mean counting term: (total length / pi) * integral of phi
    assert report.rhs_weyl == pytest.approx(gaussian_moment(10.0, 0.5, lo, hi), rel=1e-10)
    # eigenvalue side: integers 6..14 weighted by phi
    lhs_expected = sum(phi(float(n)) for n in range(6, 15))
    assert report.lhs == pytest.approx(lhs_expected, rel=1e-10)
    assert report.eigenvalue_count == 9
    assert report.weyl_count == pytest.approx(8.0)
    rows = report.residuals
    assert [row["n_max"] for row in rows] == list(range(7))
    for prev, nxt in zip(rows, rows[1:]):
        assert nxt["value"] <= prev["value"] + 1e-12
    assert report.residual(6) <= 1e-6


def test_wider_test_functions_need_fewer_orbits(g_interval_pi):
    narrow = trace_check(g_interval_pi, TestFunction(10.0, 0.25, 8.0), 2)
    wide = trace_check(g_interval_pi, TestFunction(10.0, 0.5, 8.0), 2)
    assert narrow.residual(2) > 1e-4
    assert wide.residual(2) < 1e-6
    assert wide.residual(2) < 1e-3 * narrow.residual(2)


def test_incomplete_spectrum_is_refused(g_star3_eq):
    phi = TestFunction(4.0, 1.0, 8.0)
    cfg = ScanConfig(resolve_multiplicity="never")
    with pytest.raises(NumericalError, match="spectrum incomplete"):
        trace_check(g_star3_eq, phi, 2, scan_config=cfg)


def test_delay_for_zero_potential_is_twice_total_length(g_star3):
    total = sum(e.length for e in g_star3.edges)
    assert wigner_delay(g_star3, 4.0) == pytest.approx(2.0 * total, abs=1e-10)


def test_delay_correction_for_point_interaction():
    from .conftest import interval

    g = interval(1.0, {"type": "delta", "strength": 2.0, "position": 0.5})
    assert wigner_delay(g, 3.0) == pytest.approx(2.2, abs=1e-10)
    for k in (1.5, 7.0):
        expected = 2.0 + 4.0 * 2.0 / (4.0 * k * k + 4.0)
        assert wigner_delay(g, k) == pytest.approx(expected, abs=1e-10)


def test_enumeration_budget_partial_result(g_triangle, caplog):
    with caplog.at_level(logging.WARNING, logger="qgspectra.orbits"):
        partial = enumerate_orbits(g_triangle, 12, budget=50)
    assert "exceeded its budget" in caplog.text
    assert partial  # shorter lengths were already complete
    assert all(a.n <= b.n for a, b in zip(partial, partial[1:]))


def test_enumeration_budget_error_mode(g_triangle):
    with pytest.raises(NumericalError, match="exceeded its budget"):
        enumerate_orbits(g_triangle, 12, budget=50, on_budget="error")
