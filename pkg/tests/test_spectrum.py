"""Spectrum scanning, root certification, and multiplicity counting."""
from __future__ import annotations

import math

import numpy as np
import pytest

from qgspectra.errors import InputError
from qgspectra.spectrum import ScanConfig, multiplicity, scan_spectrum

from .oracles import interval_delta_secular, roots_on

# Cross-checked against an independent second-order discretization of the
# same operator (extrapolated in the step size); the two agree to 1.5e-9
# on every entry.
DELTA_STAR_KS = [
    1.011147546,
    1.832261014,
    2.079247968,
    3.270757560,
    4.829440399,
    4.884926815,
    6.394241068,
    7.873904664,
    7.950667868,
    9.451672551,
    11.013134287,
    11.063882621,
]


def test_config_defaults():
    c = ScanConfig()
    assert c.grid_step is None
    assert c.root_tol == 1e-9
    assert c.merge_tol == 1e-7
    assert c.residual_tol == 1e-6
    assert c.k_floor == 0.001
    assert c.workers == 1
    assert c.allow_below_threshold is False
    assert c.resolve_multiplicity == "auto"


def test_neumann_interval_spectrum_is_integers(g_interval_pi):
    res = scan_spectrum(g_interval_pi, 0.5, 10.5)
    assert len(res.roots) == 10
    for n, r in enumerate(res.roots, start=1):
        assert abs(r.k - n) <= 1e-9
        assert r.multiplicity == 1
        assert abs(r.residual) <= 1e-6
    assert res.total_count() == 10
    assert res.flagged == []
    assert res.threshold == 0.0
    assert res.threshold_method == "closed-form"


def test_scan_start_is_floored(g_interval_pi):
    res = scan_spectrum(g_interval_pi, 0.0, 3.5)
    assert res.k_lo == 0.001
    assert [round(k) for k in res.ks] == [1, 2, 3]


def test_point_interaction_interval_matches_reference(g_interval_delta_pi):
    res = scan_spectrum(g_interval_delta_pi, 0.5, 6.5)
    f = interval_delta_secular(math.pi, 2.0, math.pi / 2)
    expected = [r for r in roots_on(f, 0.4, 6.6) if 0.5 <= r <= 6.5]
    assert len(res.ks) == len(expected) == 7
    for got, want in zip(res.ks, expected):
        assert abs(got - want) <= 1e-8


def test_star_with_point_interactions_matches_frozen_list(g_delta_star):
    res = scan_spectrum(g_delta_star, 0.5, 12.0)
    assert len(res.ks) == len(DELTA_STAR_KS)
    for got, want in zip(res.ks, DELTA_STAR_KS):
        assert abs(got - want) <= 5e-9
    assert list(res.multiplicities) == [1] * 12
    assert res.flagged == []


def test_close_pair_is_not_merged(g_delta_star):
    # the 4.829 / 4.885 pair sits in one coarse grid cell; both must survive
    res = scan_spectrum(g_delta_star, 0.5, 6.0)
    near = [k for k in res.ks if 4.7 < k < 5.0]
    assert len(near) == 2


def test_equilateral_star_multiplicity_layout(g_star3_eq):
    res = scan_spectrum(g_star3_eq, 1.0, 5.0)
    layout = [(r.k, r.multiplicity) for r in res.roots]
    expected = [(math.pi / 2, 2), (math.pi, 1), (3 * math.pi / 2, 2)]
    assert len(layout) == 3
    for (k, m), (k0, m0) in zip(layout, expected):
        assert abs(k - k0) <= 1e-9
        assert m == m0
    assert res.total_count() == 5


def test_multiplicity_resolution_modes(g_star3_eq):
    always = scan_spectrum(g_star3_eq, 1.0, 5.0, ScanConfig(resolve_multiplicity="always"))
    assert [r.multiplicity for r in always.roots] == [2, 1, 2]
    never = scan_spectrum(g_star3_eq, 1.0, 5.0, ScanConfig(resolve_multiplicity="never"))
    # without winding counts only the sign-change root remains visible
    assert len(never.roots) == 1
    assert abs(never.roots[0].k - math.pi) <= 1e-8
    assert never.roots[0].multiplicity == 1


def test_winding_count_on_isolated_roots(g_star3_eq):
    assert multiplicity(g_star3_eq, math.pi / 2, 0.3) == 2
    assert multiplicity(g_star3_eq, math.pi, 0.3) == 1
    assert multiplicity(g_star3_eq, 0.8, 0.3) == 0


def test_per_root_winding_agrees_with_scan(g_interval_delta_pi):
    res = scan_spectrum(g_interval_delta_pi, 0.5, 6.5)
    ks = list(res.ks)
    gaps = [b - a for a, b in zip(ks, ks[1:])]
    total = 0
    for i, r in enumerate(res.roots):
        near = []
        if i > 0:
            near.append(gaps[i - 1])
        if i < len(gaps):
            near.append(gaps[i])
        radius = min(0.35 * min(near), 0.15)
        total += multiplicity(g_interval_delta_pi, r.k, radius)
    assert total == res.total_count()


def test_scan_below_threshold_is_clamped(g_interval_delta_neg):
    res = scan_spectrum(g_interval_delta_neg, 0.5, 6.5)
    K = math.sqrt(3.0) / 2.0
    assert res.k_lo > K
    assert any("scan start raised above the subunitarity threshold" in d for d in res.diagnostics)
    assert len(res.ks) == 2
    assert abs(res.ks[0] - math.pi) <= 1e-8
    assert abs(res.ks[1] - 6.120152766860) <= 1e-8


def test_scan_below_threshold_opt_in(g_interval_delta_neg):
    cfg = ScanConfig(allow_below_threshold=True)
    res = scan_spectrum(g_interval_delta_neg, 0.5, 6.5, cfg)
    assert res.k_lo == 0.5
    assert any("root certificates are weaker" in d for d in res.diagnostics)
    assert len(res.ks) == 2
    assert abs(res.ks[0] - math.pi) <= 1e-8
    assert abs(res.ks[1] - 6.120152766860) <= 1e-8


def test_range_entirely_below_threshold_rejected(g_interval_delta_neg):
    with pytest.raises(InputError, match="lies at or below"):
        scan_spectrum(g_interval_delta_neg, 0.3, 0.8)


def test_winding_guard_below_threshold(g_interval_delta_neg):
    with pytest.raises(InputError, match="requires k0 - radius > threshold"):
        multiplicity(g_interval_delta_neg, 1.0, 0.5)


def test_scan_is_deterministic(g_delta_star):
    a = scan_spectrum(g_delta_star, 0.5, 8.0)
    b = scan_spectrum(g_delta_star, 0.5, 8.0)
    assert list(a.ks) == list(b.ks)
    assert [r.residual for r in a.roots] == [r.residual for r in b.roots]


def test_workers_do_not_change_results(g_delta_star):
    serial = scan_spectrum(g_delta_star, 0.5, 8.0)
    parallel = scan_spectrum(g_delta_star, 0.5, 8.0, ScanConfig(workers=2))
    assert list(serial.ks) == list(parallel.ks)
    assert list(serial.multiplicities) == list(parallel.multiplicities)
