"""Periodic orbits and the exact trace-formula check.

Orbits are closed admissible walks in the directed-edge alphabet; one
step of the big scattering matrix S moves from a directed edge s to a
directed edge r either by transmitting through s's edge and scattering
at the far vertex, or by reflecting off the edge potential and
scattering at the near vertex.  Self-loops are excluded upstream, so
every admissible (s, r) pair has exactly one of the two step types and
the step weight factorizes as (vertex entry) x (edge-matrix entry).

With that alphabet, the class sum identity

    tr S(k)^n = sum over cyclic classes p with n_p = n of
                n_primitive(p) * prod of step weights

holds exactly, which is what orbit_sum_check verifies against dense
matrix powers.  The trace-formula machinery then integrates Gaussian
test functions against the phase derivative (Weyl term) and against the
orbit amplitudes A_p = (n_primitive/n) Im d/dk prod tau.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .edge import subunitarity_threshold, transition_matrix, transition_matrix_dk
from .errors import InputError, NumericalError
from .graph import AuxiliaryGraph, MetricGraph
from .scattering import assemble_S, theta_prime
from .spectrum import K_FLOOR, ScanConfig, scan_spectrum

logger = logging.getLogger(__name__)

__all__ = [
    "PeriodicOrbit",
    "TestFunction",
    "TraceReport",
    "enumerate_orbits",
    "orbit_weight",
    "orbit_amplitude",
    "orbit_sum_check",
    "structural_step_matrix",
    "step_sigma",
    "trace_check",
    "wigner_delay",
]


def _reflecting(pot) -> bool:
    """Can this potential backscatter at all (structurally)?"""
    if pot.kind == "zero":
        return False
    if pot.kind == "delta":
        return pot.strength != 0.0
    if pot.kind == "constant":
        return pot.value != 0.0
    return True


def _neighbors(g: MetricGraph, s: int) -> List[Tuple[int, str]]:
    """Admissible S-steps out of directed edge s as (target, kind).

    kind "transmit": cross the edge, scatter at tau(s); forbidden back
    into the reversed edge at a degree-2 vertex (that sigma entry is 0).
    kind "reflect": bounce off the edge potential, scatter at iota(s);
    needs a potential that reflects, and the straight-through sigma
    entry vanishes at degree-2 vertices.
    """
    out: List[Tuple[int, str]] = []
    sb = MetricGraph.reverse(s)
    vt = g.tau(s)
    deg_t = g.degree[vt]
    for r in g.out_directions(vt):
        if deg_t == 2 and r == sb:
            continue
        out.append((r, "transmit"))
    if _reflecting(g.edge_of(s).potential):
        vi = g.iota(s)
        deg_i = g.degree[vi]
        for r in g.out_directions(vi):
            if deg_i == 2 and r == s:
                continue
            out.append((r, "reflect"))
    return out


def structural_step_matrix(g: MetricGraph) -> np.ndarray:
    """0/1 pattern of admissible S-steps (rows = target, cols = source)."""
    n = 2 * len(g.edges)
    a = np.zeros((n, n), dtype=int)
    for s in range(n):
        for r, _ in _neighbors(g, s):
            a[r, s] = 1
    return a


@dataclasses.dataclass(frozen=True)
class PeriodicOrbit:
    """A cyclic class of closed admissible walks.

    states[i] is the directed edge occupied before step i; step i goes
    states[i] -> states[(i+1) % n] with the recorded kind.  The class is
    identified by the lexicographically minimal rotation (key).
    """

    states: Tuple[int, ...]
    kinds: Tuple[str, ...]
    n: int
    n_primitive: int
    repetitions: int
    key: Tuple[int, ...]

    def primitive(self) -> "PeriodicOrbit":
        if self.repetitions == 1:
            return self
        m = self.n_primitive
        return PeriodicOrbit(
            states=self.states[:m],
            kinds=self.kinds[:m],
            n=m,
            n_primitive=m,
            repetitions=1,
            key=_min_rotation(self.states[:m]),
        )


def _min_rotation(seq: Tuple[int, ...]) -> Tuple[int, ...]:
    n = len(seq)
    return min(tuple(seq[i:] + seq[:i]) for i in range(n))


def _primitive_period(seq: Tuple[int, ...]) -> int:
    n = len(seq)
    for d in range(1, n + 1):
        if n % d == 0 and all(seq[i] == seq[(i + d) % n] for i in range(n)):
            return d
    return n


def make_orbit(g: MetricGraph, states: Sequence[int]) -> PeriodicOrbit:
    """Build (and validate) the orbit class through the given state cycle."""
    states = tuple(int(s) for s in states)
    n = len(states)
    if n == 0:
        raise InputError("an orbit needs at least one step")
    kinds = []
    for i, s in enumerate(states):
        r = states[(i + 1) % n]
        match = [kind for (t, kind) in _neighbors(g, s) if t == r]
        if not match:
            raise InputError(f"inadmissible step {s} -> {r}")
        kinds.append(match[0])
    np_ = _primitive_period(states)
    return PeriodicOrbit(
        states=states,
        kinds=tuple(kinds),
        n=n,
        n_primitive=np_,
        repetitions=n // np_,
        key=_min_rotation(states),
    )


def enumerate_orbits(
    gs,
    n_max: int,
    budget: int = 5_000_000,
    on_budget: str = "partial",
) -> List[PeriodicOrbit]:
    """One representative per cyclic class of closed walks with <= n_max steps.

    Accepts the graph or its midpoint-subdivided auxiliary form.  The
    walk search expands at most `budget` partial paths; exceeding it
    logs a warning and returns the classes found so far (shorter lengths
    are then complete, the longest may not be), or raises if
    on_budget="error".
    """
    g = gs.parent if isinstance(gs, AuxiliaryGraph) else gs
    if not isinstance(g, MetricGraph):
        raise InputError("enumerate_orbits expects a graph or auxiliary graph")
    if n_max < 1:
        raise InputError("n_max must be >= 1")
    if on_budget not in ("error", "partial"):
        raise InputError("on_budget must be 'error' or 'partial'")

    n_states = 2 * len(g.edges)
    nbrs = {s: _neighbors(g, s) for s in range(n_states)}
    orbits: List[PeriodicOrbit] = []
    seen: set = set()
    counter = {"spent": 0}

    # DFS over walks s0 -> ... -> s0 of length n whose interior states
    # never drop below s0: each cyclic class is found only from its
    # minimal state, and walks revisiting that minimal state mid-cycle
    # are deduplicated by the canonical rotation key.
    def walk(s0: int, path: List[int], n: int) -> None:
        counter["spent"] += 1
        if counter["spent"] > budget:
            raise _Budget()
        depth = len(path)
        for r, _ in nbrs[path[-1]]:
            if depth < n:
                if r >= s0:
                    path.append(r)
                    walk(s0, path, n)
                    path.pop()
            elif r == s0:
                states = tuple(path)
                key = _min_rotation(states)
                if key not in seen:
                    seen.add(key)
                    orbits.append(make_orbit(g, states))

    try:
        for n in range(1, n_max + 1):
            for s0 in range(n_states):
                walk(s0, [s0], n)
    except _Budget:
        if on_budget == "partial":
            logger.warning(
                "orbit enumeration exceeded its budget of %d path "
                "expansions; returning the %d classes found so far",
                budget,
                len(orbits),
            )
            orbits.sort(key=lambda p: (p.n, p.key))
            return orbits
        raise NumericalError(
            f"orbit enumeration exceeded its budget of {budget} "
            "path expansions; raise `budget` or lower n_max"
        )
    orbits.sort(key=lambda p: (p.n, p.key))
    return orbits


class _Budget(Exception):
    pass


# ---------------------------------------------------------------------------
# step weights and amplitudes
# ---------------------------------------------------------------------------


def _sigma_entry(g: MetricGraph, v: str, r: int, s: int) -> float:
    return 2.0 / g.degree[v] - (1.0 if r == s else 0.0)


def step_sigma(g: MetricGraph, s: int, r: int, kind: str) -> float:
    if kind == "transmit":
        return _sigma_entry(g, g.tau(s), r, MetricGraph.reverse(s))
    return _sigma_entry(g, g.iota(s), r, s)


def _edge_entry_cache(g: MetricGraph, k: complex, want_dk: bool):
    """Per-edge transition entries (and d/dk) reused across orbits."""
    cache: Dict[int, Tuple] = {}
    for e in range(len(g.edges)):
        t = transition_matrix(g, e, k)
        if want_dk:
            dt = transition_matrix_dk(g, e, k)
            cache[e] = (t.trans, t.r_from, t.r_to, dt[0, 0], dt[1, 0], dt[0, 1])
        else:
            cache[e] = (t.trans, t.r_from, t.r_to, None, None, None)
    return cache


def _step_factors(
    g: MetricGraph, p: PeriodicOrbit, cache, want_dk: bool
) -> Tuple[List[complex], List[complex]]:
    """Weights tau_i (and their k-derivatives) for each step of p."""
    ws: List[complex] = []
    dws: List[complex] = []
    for i, s in enumerate(p.states):
        r = p.states[(i + 1) % p.n]
        kind = p.kinds[i]
        e = s // 2
        trans, r_from, r_to, dtrans, dr_from, dr_to = cache[e]
        sig = step_sigma(g, s, r, kind)
        if kind == "transmit":
            tpart, dtpart = trans, dtrans
        elif s % 2 == 0:
            tpart, dtpart = r_from, dr_from
        else:
            tpart, dtpart = r_to, dr_to
        ws.append(sig * tpart)
        dws.append(sig * dtpart if want_dk else 0.0)
    return ws, dws


def orbit_weight(p: PeriodicOrbit, g: MetricGraph, k: complex) -> complex:
    """Product of step weights tau over the full orbit at k."""
    cache = _edge_entry_cache(g, complex(k), want_dk=False)
    ws, _ = _step_factors(g, p, cache, want_dk=False)
    out = 1.0 + 0j
    for w in ws:
        out *= w
    return out


def _amplitude_from_factors(p: PeriodicOrbit, ws, dws) -> float:
    n = p.n
    prefix = [1.0 + 0j] * (n + 1)
    for i, w in enumerate(ws):
        prefix[i + 1] = prefix[i] * w
    suffix = [1.0 + 0j] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = ws[i] * suffix[i + 1]
    dprod = sum(prefix[i] * dws[i] * suffix[i + 1] for i in range(n))
    return (p.n_primitive / p.n) * dprod.imag


def orbit_amplitude(p: PeriodicOrbit, g: MetricGraph, k: float) -> float:
    """A_p(k) = (n_primitive/n) Im d/dk of the step-weight product.

    Vertex factors are k-independent; the edge factors carry all the
    k-dependence, differentiated by the edge-matrix derivative."""
    kthr = subunitarity_threshold(g)
    if not complex(k).imag == 0.0:
        raise InputError("orbit amplitudes are defined for real k")
    if k <= kthr:
        raise InputError(f"orbit amplitude requires k > threshold K={kthr:.6g}")
    cache = _edge_entry_cache(g, complex(k), want_dk=True)
    ws, dws = _step_factors(g, p, cache, want_dk=True)
    return _amplitude_from_factors(p, ws, dws)


def orbit_sum_check(g: MetricGraph, k: float, n: int) -> float:
    """|sum over classes of n_primitive * prod tau  -  tr S^n| at real k."""
    if n < 1:
        raise InputError("n must be >= 1")
    orbits = enumerate_orbits(g, n, on_budget="error")
    cache = _edge_entry_cache(g, complex(k), want_dk=False)
    total = 0.0 + 0j
    for p in orbits:
        if p.n != n:
            continue
        ws, _ = _step_factors(g, p, cache, want_dk=False)
        prod = 1.0 + 0j
        for w in ws:
            prod *= w
        total += p.n_primitive * prod
    s = assemble_S(g, complex(k))
    tr = complex(np.trace(np.linalg.matrix_power(s, n)))
    return abs(total - tr)


# ---------------------------------------------------------------------------
# trace formula
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class TestFunction:
    """Gaussian test weight exp(-(k-center)^2 / (2 sigma^2)), treated as
    supported on center +- support_sigmas * sigma."""

    center: float
    sigma: float
    support_sigmas: float = 8.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.center) and self.sigma > 0):
            raise InputError("test function needs finite center and sigma > 0")

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        z = (k - self.center) / self.sigma
        return np.exp(-0.5 * z * z)

    @property
    def support(self) -> Tuple[float, float]:
        half = self.support_sigmas * self.sigma
        return (self.center - half, self.center + half)


@dataclasses.dataclass
class TraceReport:
    phi: Dict[str, float]
    threshold: float
    lhs: float
    rhs_weyl: float
    rhs_orbits: List[Dict[str, float]]
    residuals: List[Dict[str, float]]
    eigenvalue_count: int
    weyl_count: float
    quadrature: Dict[str, float]
    diagnostics: List[str]

    def residual(self, n_max: int) -> float:
        for row in self.residuals:
            if row["n_max"] == n_max:
                return row["value"]
        raise KeyError(f"no residual computed for n_max={n_max}")


def _gauss_panels(a: float, b: float, width: float, nodes: int):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    n_panels = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, n_panels + 1)
    ks = []
    wts = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        ks.append(mid + half * x)
        wts.append(half * w)
    return np.concatenate(ks), np.concatenate(wts), n_panels


def trace_check(
    g: MetricGraph,
    phi: TestFunction,
    n_max: int,
    panel_nodes: int = 64,
    panel_width: Optional[float] = None,
    scan_config: Optional[ScanConfig] = None,
) -> TraceReport:
    """Check the eigenvalue sum against the phase and orbit terms.

    lhs sums multiplicity-weighted phi(k_n) over the scanned spectrum;
    rhs_weyl integrates phi times the phase derivative / 2 pi; the orbit
    term adds (1/pi) integral of phi times the partial amplitude sums for
    every cutoff up to n_max.  A Weyl-count comparison aborts when the
    scan evidently lost roots.
    """
    if n_max < 0:
        raise InputError("n_max must be >= 0")
    info = subunitarity_threshold(g, detailed=True)
    lo_floor = max(info.K + 1e-9, K_FLOOR)
    a, b = phi.support
    a = max(a, lo_floor)
    if phi.center <= info.K:
        raise InputError(
            f"test function centered at {phi.center:g} sits at or below the "
            f"subunitarity threshold K={info.K:.6g}"
        )
    if b <= a:
        raise InputError("test-function support lies below the usable range")

    diagnostics: List[str] = []
    cfg = scan_config or ScanConfig()
    spec = scan_spectrum(g, a, b, cfg)
    diagnostics.extend(spec.diagnostics)

    lhs = float(
        sum(r.multiplicity * float(phi(r.k)) for r in spec.roots)
    )

    l_max = max(e.length for e in g.edges)
    if panel_width is None:
        panel_width = min(1.0, 8.0 * math.pi / (max(n_max, 1) * l_max))
    ks, wts, n_panels = _gauss_panels(a, b, panel_width, panel_nodes)

    tp = np.array([theta_prime(g, float(k)) for k in ks])
    phis = phi(ks)
    rhs_weyl = float(np.sum(wts * phis * tp) / (2.0 * math.pi))

    # Missing-root guard: the integrated phase density counts roots up to
    # a boundary term bounded by the matrix dimension.
    weyl_count = float(np.sum(wts * tp) / (2.0 * math.pi))
    n_found = spec.total_count()
    slack = 2 * len(g.edges) + 1
    if abs(n_found - weyl_count) > slack:
        raise NumericalError(
            f"scan found {n_found} roots in [{a:.3f}, {b:.3f}] but the phase "
            f"count expects {weyl_count:.2f} (+-{slack}); spectrum incomplete"
        )

    rhs_orbit_rows: List[Dict[str, float]] = []
    residual_rows: List[Dict[str, float]] = []
    partial = np.zeros_like(ks)
    per_cutoff: Dict[int, np.ndarray] = {}
    if n_max >= 1:
        orbits = enumerate_orbits(g, n_max, on_budget="error")
        caches = [_edge_entry_cache(g, complex(float(k)), want_dk=True) for k in ks]
        for p in orbits:
            amps = np.array(
                [
                    _amplitude_from_factors(p, *_step_factors(g, p, caches[j], True))
                    for j in range(len(ks))
                ]
            )
            per_cutoff.setdefault(p.n, np.zeros_like(ks))
            per_cutoff[p.n] += amps
    running = np.zeros_like(ks)
    for m in range(0, n_max + 1):
        if m >= 1 and m in per_cutoff:
            running = running + per_cutoff[m]
        value = float(np.sum(wts * phis * running) / math.pi)
        rhs_orbit_rows.append({"n_max": m, "value": value})
        residual_rows.append({"n_max": m, "value": abs(lhs - rhs_weyl - value)})

    return TraceReport(
        phi={
            "center": phi.center,
            "sigma": phi.sigma,
            "support_sigmas": phi.support_sigmas,
        },
        threshold=info.K,
        lhs=lhs,
        rhs_weyl=rhs_weyl,
        rhs_orbits=rhs_orbit_rows,
        residuals=residual_rows,
        eigenvalue_count=n_found,
        weyl_count=weyl_count,
        quadrature={
            "k_lo": a,
            "k_hi": b,
            "panel_width": panel_width,
            "panel_nodes": panel_nodes,
            "n_panels": n_panels,
        },
        diagnostics=diagnostics,
    )


def wigner_delay(g: MetricGraph, k: float) -> float:
    """Derivative of the total transition phase at k (time-delay form)."""
    kthr = subunitarity_threshold(g)
    if k <= kthr:
        raise InputError(f"Wigner delay requires k > threshold K={kthr:.6g}")
    return theta_prime(g, k)
