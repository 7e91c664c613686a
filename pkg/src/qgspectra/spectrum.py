"""Eigenvalue location by secular-function scanning.

The scan walks a k grid (step bounded by pi / (4 * total length), the
minimal oscillation scale of det(I - S)), tracks the branch of the
regularized secular function, and refines every sign change with a
bisection/secant hybrid.  Even-multiplicity roots never change sign, so
grid dips of |det(I - S)| are polished by golden-section search and then
certified by an argument-principle winding count.

The winding contour is a rectangle centred on the candidate whose
interior lies in the closed upper half plane, where strict subunitarity
of S pins every zero of det(I - S) to the real segment.  The boundary is
walked with the candidate indented out of the real side; the omitted
indentation semicircle around an order-m zero carries exactly -m*pi, so
the walked phase change equals m*pi.

Window decomposition is fixed by the k range alone (never by the worker
count), so results are identical no matter how the work is distributed.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Tuple

import numpy as np

from .edge import subunitarity_threshold
from .errors import InputError, NumericalError, PhaseTrackingError
from .graph import MetricGraph
from .scattering import BranchState, assemble_S, secular

__all__ = [
    "ScanConfig",
    "RootRecord",
    "SpectrumResult",
    "scan_spectrum",
    "multiplicity",
]

#: Hard lower bound on scanned k; the secular machinery is singular at k = 0.
K_FLOOR = 1e-3

# Windows span this many grid cells so that parallel decomposition is a
# pure partition of the sequential grid.
_CELLS_PER_WINDOW = 64

_NODE_ZERO_FRAC = 1e-12      # |Re zeta| below this fraction of scale = on-node root
_DIP_NEIGHBOR_RATIO = 0.5    # local minimum must undercut both neighbours by this
_DIP_SCALE_FRAC = 0.05       # ... and sit well below the window's typical |w|
_DIP_ACCEPT_FRAC = 1e-7      # polished dip counts as a root below this fraction
_GOLDEN_TOL = 1e-10
_WALK_DEPTH = 24             # max recursive bisections per contour segment
_SPAN_DEPTH = 3              # max flank re-probes per cell (odd clusters)
_CURVATURE_RATIO = 20.0      # secant-slope growth that flags a higher-order root


@dataclasses.dataclass(frozen=True)
class ScanConfig:
    """Parameters controlling a spectrum scan.

    grid_step: maximum spacing of scan nodes; None picks pi/(4 * total
        length).  Values above that bound are clipped to it.
    root_tol: bracket width at which sign-change refinement stops.
    merge_tol: roots closer than this are fused into one record.
    residual_tol: |det(I - S)| above this at a reported root raises a
        diagnostic flag.
    k_floor: smallest admissible k.
    workers: number of scan processes; output does not depend on it.
    allow_below_threshold: scan below the subunitarity threshold K
        (diagnostic mode; eigenvalue certificates are weaker there).
    resolve_multiplicity: "auto" resolves winding numbers only for dip
        candidates and merged clusters, "always" windings every root,
        "never" reports multiplicity 1 and leaves dips as flags.
    """

    grid_step: Optional[float] = None
    root_tol: float = 1e-9
    merge_tol: float = 1e-7
    residual_tol: float = 1e-6
    k_floor: float = K_FLOOR
    workers: int = 1
    allow_below_threshold: bool = False
    resolve_multiplicity: str = "auto"

    def __post_init__(self) -> None:
        if self.root_tol <= 0 or self.merge_tol <= 0:
            raise InputError("tolerances must be positive")
        if self.resolve_multiplicity not in ("auto", "always", "never"):
            raise InputError(
                "resolve_multiplicity must be 'auto', 'always' or 'never'"
            )
        if self.workers < 1:
            raise InputError("workers must be a positive integer")


@dataclasses.dataclass(frozen=True)
class RootRecord:
    """One located eigenvalue: position, multiplicity, |det(I-S)| there."""

    k: float
    multiplicity: int
    residual: float


@dataclasses.dataclass
class SpectrumResult:
    roots: List[RootRecord]
    threshold: float
    threshold_method: str
    k_lo: float
    k_hi: float
    diagnostics: List[str]
    flagged: List[Tuple[float, float]]

    @property
    def ks(self) -> np.ndarray:
        return np.array([r.k for r in self.roots], dtype=float)

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([r.multiplicity for r in self.roots], dtype=int)

    def total_count(self) -> int:
        return int(sum(r.multiplicity for r in self.roots))


def _det_w(g: MetricGraph, k: complex) -> complex:
    s = assemble_S(g, k)
    return complex(np.linalg.det(np.eye(s.shape[0], dtype=complex) - s))


def _bisect_secant(
    f: Callable[[float], float],
    a: float,
    b: float,
    fa: float,
    fb: float,
    xtol: float,
) -> float:
    """Root of f on a sign-change bracket [a, b] to |b - a| < xtol.

    Secant proposals are accepted when they fall safely inside the
    bracket and keep shrinking it; otherwise the step falls back to
    bisection, so convergence is guaranteed.
    """
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    for _ in range(200):
        if b - a < xtol:
            break
        mid = 0.5 * (a + b)
        x = mid
        if fb != fa:
            sec = (a * fb - b * fa) / (fb - fa)
            margin = 0.01 * (b - a)
            if a + margin < sec < b - margin:
                x = sec
        fx = f(x)
        if fx == 0.0:
            return x
        if (fa < 0) != (fx < 0):
            b, fb = x, fx
        else:
            a, fa = x, fx
    return 0.5 * (a + b)


def _golden_min(
    f: Callable[[float], float], a: float, b: float, tol: float
) -> Tuple[float, float]:
    """Golden-section minimum of f on [a, b]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(200):
        if b - a < tol:
            break
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    x = x1 if f1 < f2 else x2
    return x, min(f1, f2)


def _arg_walk(
    w: Callable[[complex], complex],
    z0: complex,
    z1: complex,
    w0: complex,
    w1: complex,
    floor: float,
    depth: int = 0,
) -> float:
    """Continuous change of arg w along the segment z0 -> z1.

    The segment is bisected until each step rotates by less than pi/2,
    which pins the branch.  Running out of depth means the contour
    passes too close to a zero.
    """
    if abs(w0) < floor or abs(w1) < floor:
        raise NumericalError("winding contour passes too close to a root")
    delta = math.atan2((w1 / w0).imag, (w1 / w0).real)
    if abs(delta) < 0.5 * math.pi:
        return delta
    if depth >= _WALK_DEPTH:
        raise NumericalError("winding contour failed to resolve the phase")
    zm = 0.5 * (z0 + z1)
    wm = w(zm)
    return _arg_walk(w, z0, zm, w0, wm, floor, depth + 1) + _arg_walk(
        w, zm, z1, wm, w1, floor, depth + 1
    )


def multiplicity(
    g: MetricGraph,
    k0: float,
    radius: float,
    threshold: Optional[float] = None,
) -> int:
    """Multiplicity of the eigenvalue at k0 by an argument-principle count.

    Above the threshold, det(I - S) is holomorphic near the contour and
    zero-free in the open upper half plane (S is strictly subunitary
    there), so every zero inside the rectangle [k0 +- radius] x
    [0, radius] sits on the real segment.  The phase is walked along the
    indented boundary: the real segment with an epsilon neighbourhood of
    k0 cut out, then up, across and down the three upper sides.  For a
    zero of order m the omitted indentation semicircle carries -m*pi, so
    the walked total equals m*pi (and 0 when k0 is not a root).
    """
    if radius <= 0:
        raise InputError("winding radius must be positive")
    kthr = subunitarity_threshold(g) if threshold is None else threshold
    if k0 - radius <= kthr:
        raise InputError(
            f"winding contour requires k0 - radius > threshold K={kthr:.6g}"
        )

    def w(z: complex) -> complex:
        return _det_w(g, z)

    eps = 0.01 * radius
    path = [
        complex(k0 - radius, 0.0),
        complex(k0 - eps, 0.0),
        None,  # indentation gap around k0
        complex(k0 + eps, 0.0),
        complex(k0 + radius, 0.0),
        complex(k0 + radius, radius),
        complex(k0 - radius, radius),
        complex(k0 - radius, 0.0),
    ]
    vals = [None if z is None else w(z) for z in path]
    scale = max(abs(v) for v in vals if v is not None)
    if scale == 0.0:
        raise NumericalError("winding contour passes too close to a root")
    floor = 1e-12 * scale
    total = 0.0
    for i in range(len(path) - 1):
        if path[i] is None or path[i + 1] is None:
            continue
        total += _arg_walk(w, path[i], path[i + 1], vals[i], vals[i + 1], floor)
    m = round(total / math.pi)
    if abs(total - m * math.pi) > 0.2:
        raise NumericalError(
            f"winding count did not converge: delta-arg={total:.6f}"
        )
    return max(int(m), 0)


# ---------------------------------------------------------------------------
# Window scan
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class _WindowReport:
    sign_roots: List[Tuple[float, float]]          # (k, residual)
    dip_candidates: List[Tuple[float, float]]      # (k, |w|) polished dips
    flagged: List[Tuple[float, float]]
    diagnostics: List[str]


def _sweep(g: MetricGraph, ks: np.ndarray):
    state = BranchState()
    out = []
    for k in ks:
        out.append(secular(g, float(k), state))
    return out


def _scan_window(
    g: MetricGraph, a: float, b: float, step: float, cfg: ScanConfig
) -> _WindowReport:
    n = max(2, int(math.ceil((b - a) / step)) + 1)
    ks = np.linspace(a, b, n)
    for attempt in range(5):
        try:
            vals = _sweep(g, ks)
            break
        except PhaseTrackingError:
            if attempt == 4:
                raise
            n = 2 * (n - 1) + 1
            ks = np.linspace(a, b, n)

    f = np.array([v.zeta.real for v in vals])
    absw = np.array([abs(v.zeta) for v in vals])
    phases = [v.det_s_phase for v in vals]
    scale = max(float(np.median(absw)), 1e-12)

    report = _WindowReport([], [], [], [])
    ratios = [
        abs(v.zeta.imag) / abs(v.zeta) for v in vals if abs(v.zeta) > 1e-9 * scale
    ]
    imag_dev = max(ratios) if ratios else 0.0
    if imag_dev > 1e-6:
        report.diagnostics.append(
            f"secular branch deviation {imag_dev:.2e} on [{a:.6g}, {b:.6g}]"
        )

    on_node = absw < _NODE_ZERO_FRAC * scale
    probe_delta_min = 8.0 * cfg.root_tol

    def h_at(phi0: float) -> Callable[[float], float]:
        # Freeze the branch rotation at a grid node; the sweep keeps the
        # phase drift below 0.9*pi per cell, so the rotated real part
        # keeps the sign of the tracked secular branch within a cell of
        # the freeze point and sign brackets survive the rotation.
        rot = complex(math.cos(0.5 * phi0), -math.sin(0.5 * phi0))

        def h(k: float) -> float:
            return (rot * _det_w(g, float(k))).real

        return h

    def h_near(k: float) -> Callable[[float], float]:
        j = int(np.argmin(np.abs(ks - k)))
        return h_at(phases[j])

    def emit_root(k: float) -> None:
        report.sign_roots.append((float(k), abs(_det_w(g, float(k)))))

    def emit_dip(k: float, w: float) -> None:
        for kk, _ in report.sign_roots:
            if abs(k - kk) <= 4.0 * cfg.merge_tol:
                return
        for kk, _ in report.dip_candidates:
            if abs(k - kk) <= 4.0 * cfg.merge_tol:
                return
        report.dip_candidates.append((float(k), float(w)))

    def resolve_span(
        h: Callable[[float], float],
        a: float,
        b: float,
        ha: float,
        hb: float,
        depth: int,
    ) -> None:
        """Refine one sign change on [a, b], then re-probe the flanks.

        A cluster of several crossings inside one cell cancels in pairs
        at the walls; probing the sign just outside the refined root
        recovers a bracket for any odd remainder on either side.
        """
        if b - a <= 4.0 * cfg.root_tol:
            emit_root(0.5 * (a + b))
            return
        root = _bisect_secant(h, a, b, ha, hb, cfg.root_tol)
        emit_root(root)
        if depth <= 0:
            return
        delta = max(1e-3 * (b - a), probe_delta_min)
        lq = root - delta
        if lq - a > delta:
            hl = h(lq)
            if (hl < 0) != (ha < 0):
                resolve_span(h, a, lq, ha, hl, depth - 1)
        rq = root + delta
        if b - rq > delta:
            hr = h(rq)
            if (hr < 0) != (hb < 0):
                resolve_span(h, rq, b, hr, hb, depth - 1)

    def probe_dip_flanks(kx: float, a: float, b: float) -> None:
        # An odd-order root found by modulus dip flips the branch sign;
        # the walls of its span then bracket any odd sibling cluster.
        delta = max(1e-3 * (b - a), probe_delta_min)
        if kx - delta - a > delta:
            h = h_near(0.5 * (a + kx))
            ha, hl = h(a), h(kx - delta)
            if (hl < 0) != (ha < 0):
                resolve_span(h, a, kx - delta, ha, hl, _SPAN_DEPTH - 1)
        if b - (kx + delta) > delta:
            h = h_near(0.5 * (kx + b))
            hr, hb = h(kx + delta), h(b)
            if (hr < 0) != (hb < 0):
                resolve_span(h, kx + delta, b, hr, hb, _SPAN_DEPTH - 1)

    sign_cells = set()
    for i in range(n - 1):
        if on_node[i] or on_node[i + 1]:
            continue
        if (f[i] < 0) != (f[i + 1] < 0):
            sign_cells.add(i)
    for i in sorted(sign_cells):
        h = h_at(phases[i])
        a0, b0 = float(ks[i]), float(ks[i + 1])
        resolve_span(h, a0, b0, h(a0), h(b0), _SPAN_DEPTH)

    for i in np.nonzero(on_node)[0]:
        k_node = float(ks[i])
        report.dip_candidates.append((k_node, float(absw[i])))

    if cfg.resolve_multiplicity != "never":
        # Modulus-dip spans: a V pattern at a node, or a cell whose wall
        # values are both small (two crossings inside one cell cancel at
        # the walls and leave no sign change to bracket).
        spans = []
        for i in range(1, n - 1):
            if on_node[i - 1] or on_node[i] or on_node[i + 1]:
                continue
            if not (absw[i] < absw[i - 1] and absw[i] < absw[i + 1]):
                continue
            if absw[i] > _DIP_NEIGHBOR_RATIO * min(absw[i - 1], absw[i + 1]):
                continue
            if absw[i] > _DIP_SCALE_FRAC * scale:
                continue
            spans.append((float(ks[i - 1]), float(ks[i + 1])))
        for i in range(n - 1):
            if on_node[i] or on_node[i + 1] or i in sign_cells:
                continue
            small = max(absw[i], absw[i + 1]) < _DIP_SCALE_FRAC * scale
            # Valley-shaped cell: both walls undercut their outer
            # neighbours, so the minimum lives strictly inside the cell.
            # This form is scale-free, which keeps it stable against the
            # window partition (the median |w| is not).
            valley = (i == 0 or absw[i] < absw[i - 1]) and (
                i + 1 == n - 1 or absw[i + 1] < absw[i + 2]
            )
            if small or valley:
                spans.append((float(ks[i]), float(ks[i + 1])))
        for a0, b0 in spans:
            kx, wx = _golden_min(
                lambda k: abs(_det_w(g, k)), a0, b0, _GOLDEN_TOL
            )
            at_wall = kx - a0 < 2.0 * _GOLDEN_TOL or b0 - kx < 2.0 * _GOLDEN_TOL
            if wx < _DIP_ACCEPT_FRAC * scale:
                emit_dip(kx, wx)
                probe_dip_flanks(kx, a0, b0)
            elif wx < _DIP_SCALE_FRAC * scale and not at_wall:
                report.flagged.append((a0, b0))
    return report


def _window_task(args) -> _WindowReport:
    g, a, b, step, cfg = args
    return _scan_window(g, a, b, step, cfg)


def scan_spectrum(
    g: MetricGraph,
    k_lo: float,
    k_hi: float,
    config: Optional[ScanConfig] = None,
) -> SpectrumResult:
    """Locate eigenvalues k in [k_lo, k_hi] with multiplicities.

    The effective scan start is raised to the subunitarity threshold K
    (and to the k floor) unless the config allows sub-threshold scans,
    in which case K is only reported.  Roots are polished to root_tol,
    deduplicated within merge_tol, and every non-simple cluster is
    certified with a winding count.
    """
    cfg = config or ScanConfig()
    if not (math.isfinite(k_lo) and math.isfinite(k_hi)) or k_hi <= k_lo:
        raise InputError("scan range must satisfy k_lo < k_hi with finite bounds")

    info = subunitarity_threshold(g, detailed=True)
    diagnostics: List[str] = []
    lo = max(k_lo, cfg.k_floor)
    if lo > k_lo:
        diagnostics.append(f"scan start raised to the k floor {cfg.k_floor:g}")
    if not cfg.allow_below_threshold and lo <= info.K:
        lo = info.K + max(1e-9, 1e-9 * info.K)
        diagnostics.append(
            f"scan start raised above the subunitarity threshold K={info.K:.9g} "
            f"({info.method}); eigenvalues at or below K are not reported"
        )
    if cfg.allow_below_threshold and k_lo <= info.K:
        diagnostics.append(
            f"scanning below the subunitarity threshold K={info.K:.9g} "
            f"({info.method}); root certificates are weaker there"
        )
    if lo >= k_hi:
        raise InputError(
            f"scan range [{k_lo:g}, {k_hi:g}] lies at or below the "
            f"subunitarity threshold K={info.K:.9g}"
        )

    max_step = math.pi / (4.0 * g.total_length)
    step = max_step if cfg.grid_step is None else min(cfg.grid_step, max_step)

    # Fixed partition into windows of _CELLS_PER_WINDOW grid cells; the
    # worker count only changes who scans which window.
    span = k_hi - lo
    n_cells = int(math.ceil(span / step))
    cells_per = _CELLS_PER_WINDOW
    bounds = [lo + step * i for i in range(0, n_cells, cells_per)] + [k_hi]
    windows = [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]
    tasks = [(g, a, b, step, cfg) for a, b in windows]

    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            reports = list(pool.map(_window_task, tasks))
    else:
        reports = [_window_task(t) for t in tasks]

    sign_roots: List[Tuple[float, float]] = []
    dips: List[Tuple[float, float]] = []
    flagged: List[Tuple[float, float]] = []
    for rep in reports:
        sign_roots.extend(rep.sign_roots)
        dips.extend(rep.dip_candidates)
        flagged.extend(rep.flagged)
        diagnostics.extend(rep.diagnostics)

    # Merge: cluster everything within merge_tol, then decide each
    # cluster's multiplicity.
    entries = [(k, res, False) for k, res in sign_roots] + [
        (k, res, True) for k, res in dips
    ]
    entries.sort(key=lambda t: t[0])
    records: List[RootRecord] = []
    i = 0
    while i < len(entries):
        j = i + 1
        while j < len(entries) and entries[j][0] - entries[j - 1][0] <= cfg.merge_tol:
            j += 1
        cluster = entries[i:j]
        k_star = min(cluster, key=lambda t: t[1])[0]
        residual = min(t[1] for t in cluster)
        needs_winding = any(t[2] for t in cluster) or len(cluster) > 1
        if cfg.resolve_multiplicity == "auto" and not needs_winding:
            # A sign change of odd order > 1 refines exactly like a
            # simple root; the secant slope |w|/(k - k*) grows with the
            # probe distance only when the zero order exceeds one.
            eta = max(1e-3 * step, 1e-6)
            s1 = abs(_det_w(g, k_star + eta)) / eta
            s2 = abs(_det_w(g, k_star + 10.0 * eta)) / (10.0 * eta)
            if s1 == 0.0 or s2 > _CURVATURE_RATIO * s1:
                needs_winding = True
        if cfg.resolve_multiplicity == "always":
            needs_winding = True
        if cfg.resolve_multiplicity == "never":
            needs_winding = False
        mult = 1
        if needs_winding:
            radius = min(step / 2.0, max(0.25 * step, 1e-5))
            # Keep neighbouring roots outside the contour, else the
            # real-side walk crosses their zeros.
            if records:
                radius = min(radius, max(0.45 * (k_star - records[-1].k), 1e-6))
            if j < len(entries):
                radius = min(radius, max(0.45 * (entries[j][0] - k_star), 1e-6))
            if k_star - radius <= info.K:
                radius = 0.5 * (k_star - info.K)
            mult = None
            last_exc: Optional[Exception] = None
            r = radius
            while r >= max(64.0 * cfg.root_tol, 1e-7):
                try:
                    mult = multiplicity(g, k_star, r, threshold=info.K)
                    break
                except NumericalError as exc:
                    last_exc = exc
                    r *= 0.5
                except InputError as exc:
                    last_exc = exc
                    break
            if mult is None:
                diagnostics.append(
                    f"winding at k={k_star:.9f} unresolved ({last_exc}); "
                    "reporting multiplicity 1"
                )
                mult = 1
            if mult == 0:
                i = j
                continue
        if residual > cfg.residual_tol:
            diagnostics.append(
                f"large secular residual {residual:.2e} at k={k_star:.9f}"
            )
        records.append(RootRecord(k=k_star, multiplicity=mult, residual=residual))
        i = j

    records.sort(key=lambda r: r.k)
    return SpectrumResult(
        roots=records,
        threshold=info.K,
        threshold_method=info.method,
        k_lo=lo,
        k_hi=k_hi,
        diagnostics=diagnostics,
        flagged=sorted(set(flagged)),
    )
