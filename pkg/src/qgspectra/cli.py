"""Command-line front end.

Subcommands load a JSON graph description, run one computation, and
write diffable artifacts: CSV with a fixed %.12e float format and a
pretty-printed JSON report with sorted keys.  Every output embeds the
config hash (sha256 over the canonical parameter JSON plus the input
file's own sha256) so a result can be traced to exactly one input and
flag set.  Wall-clock time is reported under the "timing" key, which is
the one field excluded from reproducibility comparisons.

Exit codes: 0 success, 1 numerical failure, 2 input error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from typing import Dict, List, Optional

import numpy as np

from .edge import subunitarity_threshold
from .errors import InputError, NumericalError
from .graph import build_graph
from .orbits import TestFunction, enumerate_orbits, orbit_weight, trace_check, wigner_delay
from .scattering import secular_sweep
from .spectrum import ScanConfig, scan_spectrum
from .wkb import compare_with_exact, wkb_wigner_delay

__all__ = ["main"]


def _make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qgspectra",
        description="Spectral computations on metric graphs with edge potentials.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="graph description (JSON)")
        p.add_argument("--kmin", type=float, default=None, help="lower k bound")
        p.add_argument("--kmax", type=float, default=None, help="upper k bound")
        p.add_argument("--nmax", type=int, default=6, help="orbit length cutoff")
        p.add_argument(
            "--phi-center", type=float, default=None, help="test-function center"
        )
        p.add_argument(
            "--phi-sigma", type=float, default=None, help="test-function width"
        )
        p.add_argument(
            "--tol", type=float, default=1e-9, help="root refinement tolerance"
        )
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument(
            "--workers",
            type=int,
            default=os.cpu_count() or 1,
            help="worker processes for window-parallel scans",
        )
        p.add_argument(
            "--allow-below-K",
            dest="allow_below_k",
            action="store_true",
            help="diagnostic mode: scan below the subunitarity threshold",
        )

    for name, help_text in (
        ("spectrum", "locate eigenvalues in [kmin, kmax]"),
        ("trace-check", "trace-formula report for a Gaussian test function"),
        ("secular-scan", "sweep the secular function over [kmin, kmax]"),
        ("wkb-compare", "WKB vs integrated solutions at doubling k values"),
        ("orbits", "enumerate periodic-orbit classes up to nmax"),
    ):
        common(sub.add_parser(name, help=help_text))
    return ap


# ---------------------------------------------------------------------------
# provenance and serialization
# ---------------------------------------------------------------------------


def _params(args: argparse.Namespace) -> Dict:
    # Execution-infrastructure knobs (workers, output directory) do not
    # change the numbers and stay out of the provenance hash.
    return {
        "kmin": args.kmin,
        "kmax": args.kmax,
        "nmax": args.nmax,
        "phi_center": args.phi_center,
        "phi_sigma": args.phi_sigma,
        "tol": args.tol,
        "allow_below_k": args.allow_below_k,
    }


def _config_hash(command: str, input_sha: str, params: Dict) -> str:
    payload = {"command": command, "input_sha256": input_sha, "params": params}
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12e}"
    return str(v)


def _write_csv(path: str, header: List[str], rows: List[List], cfg_hash: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# config_hash={cfg_hash}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: str, payload: Dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _load(args: argparse.Namespace):
    with open(args.input, "rb") as f:
        raw = f.read()
    input_sha = hashlib.sha256(raw).hexdigest()
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed JSON input {args.input!r}: {exc}")
    g = build_graph(data)
    params = _params(args)
    cfg_hash = _config_hash(args.command, input_sha, params)
    return g, input_sha, params, cfg_hash


def _meta_base(args, g, input_sha: str, params: Dict, cfg_hash: str) -> Dict:
    info = subunitarity_threshold(g, detailed=True)
    return {
        "command": args.command,
        "config": params,
        "config_hash": cfg_hash,
        "input_sha256": input_sha,
        "graph": {
            "n_vertices": len(g.vertices),
            "n_edges": len(g.edges),
            "total_length": g.total_length,
        },
        "threshold": {"K": info.K, "method": info.method},
    }


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [
        "--" + n.replace("_", "-")
        for n in names
        if getattr(args, n) is None
    ]
    if missing:
        raise InputError(
            f"{args.command} requires {', '.join(missing)}"
        )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_spectrum(args, g, meta, cfg_hash: str) -> str:
    _require(args, "kmin", "kmax")
    cfg = ScanConfig(
        root_tol=args.tol,
        workers=args.workers,
        allow_below_threshold=args.allow_below_k,
    )
    result = scan_spectrum(g, args.kmin, args.kmax, cfg)
    rows = [[r.k, r.multiplicity, r.residual] for r in result.roots]
    _write_csv(
        os.path.join(args.out, "spectrum.csv"),
        ["k", "multiplicity", "residual"],
        rows,
        cfg_hash,
    )
    meta.update(
        {
            "k_lo": result.k_lo,
            "k_hi": result.k_hi,
            "n_roots": len(result.roots),
            "total_multiplicity": result.total_count(),
            "diagnostics": result.diagnostics,
            "flagged_intervals": [list(t) for t in result.flagged],
        }
    )
    path = os.path.join(args.out, "meta.json")
    _write_json(path, meta)
    return path


def _orbit_rows(g, orbits, k_sample: float) -> List[List]:
    rows = []
    for i, p in enumerate(orbits):
        wt = orbit_weight(p, g, k_sample)
        rows.append(
            [
                i,
                p.n,
                p.n_primitive,
                p.repetitions,
                "-".join(str(s) for s in p.states),
                "".join("T" if kind == "transmit" else "R" for kind in p.kinds),
                wt.real,
                wt.imag,
            ]
        )
    return rows


_ORBIT_HEADER = [
    "id",
    "n",
    "n_primitive",
    "repetitions",
    "states",
    "kinds",
    "weight_re",
    "weight_im",
]


def _cmd_trace_check(args, g, meta, cfg_hash: str) -> str:
    _require(args, "phi_center", "phi_sigma")
    if args.nmax < 0:
        raise InputError("--nmax must be >= 0")
    phi = TestFunction(args.phi_center, args.phi_sigma)
    cfg = ScanConfig(
        root_tol=args.tol,
        workers=args.workers,
        allow_below_threshold=args.allow_below_k,
    )
    report = trace_check(g, phi, args.nmax, scan_config=cfg)
    payload = dict(meta)
    rep = dataclasses.asdict(report)
    # JSON schema of the report file: the test-function center is "k0"
    # and the scattering threshold is "K".
    rep["phi"] = {
        "k0": report.phi["center"],
        "sigma": report.phi["sigma"],
        "support_sigmas": report.phi["support_sigmas"],
    }
    rep["K"] = rep.pop("threshold")
    payload["report"] = rep
    path = os.path.join(args.out, "trace_report.json")
    _write_json(path, payload)
    orbits = enumerate_orbits(g, args.nmax) if args.nmax >= 1 else []
    _write_csv(
        os.path.join(args.out, "orbit_table.csv"),
        _ORBIT_HEADER,
        _orbit_rows(g, orbits, phi.center),
        cfg_hash,
    )
    return path


def _cmd_secular_scan(args, g, meta, cfg_hash: str) -> str:
    _require(args, "kmin", "kmax")
    if args.kmin <= 0 or args.kmax <= args.kmin:
        raise InputError("secular-scan needs 0 < kmin < kmax")
    step = math.pi / (4.0 * g.total_length)
    n = max(2, int(math.ceil((args.kmax - args.kmin) / step)) + 1)
    ks = np.linspace(args.kmin, args.kmax, n)
    vals = secular_sweep(g, [float(k) for k in ks])
    rows = [
        [float(np.real(v.k)), v.zeta.real, v.zeta.imag, v.theta] for v in vals
    ]
    _write_csv(
        os.path.join(args.out, "secular.csv"),
        ["k", "zeta_re", "zeta_im", "theta"],
        rows,
        cfg_hash,
    )
    meta.update({"n_points": n, "grid_step": (args.kmax - args.kmin) / (n - 1)})
    path = os.path.join(args.out, "meta.json")
    _write_json(path, meta)
    return path


def _cmd_wkb_compare(args, g, meta, cfg_hash: str) -> str:
    _require(args, "kmin", "kmax")
    if args.kmin <= 0 or args.kmax < args.kmin:
        raise InputError("wkb-compare needs 0 < kmin <= kmax")
    ks = []
    k = args.kmin
    while k <= args.kmax * (1 + 1e-12):
        ks.append(k)
        k *= 2.0
    rows = []
    for k in ks:
        delay = wigner_delay(g, k)
        delay_wkb = wkb_wigner_delay(g, k)
        for e in range(len(g.edges)):
            cmp_row = compare_with_exact(g, e, k)
            rows.append(
                [
                    k,
                    g.edges[e].eid,
                    cmp_row["deviation"],
                    cmp_row["corrected_deviation"],
                    cmp_row["eta1_sup"],
                    cmp_row["action"],
                    delay,
                    delay_wkb,
                ]
            )
    _write_csv(
        os.path.join(args.out, "wkb_compare.csv"),
        [
            "k",
            "edge",
            "deviation",
            "corrected_deviation",
            "eta1_sup",
            "action",
            "wigner_delay",
            "wigner_delay_wkb",
        ],
        rows,
        cfg_hash,
    )
    meta.update({"k_values": ks})
    path = os.path.join(args.out, "meta.json")
    _write_json(path, meta)
    return path


def _cmd_orbits(args, g, meta, cfg_hash: str) -> str:
    if args.nmax < 1:
        raise InputError("--nmax must be >= 1 for orbit enumeration")
    k_sample = args.kmin if args.kmin is not None else 1.0
    if k_sample <= 0:
        raise InputError("--kmin (the sample k for weights) must be positive")
    orbits = enumerate_orbits(g, args.nmax)
    _write_csv(
        os.path.join(args.out, "orbit_table.csv"),
        _ORBIT_HEADER,
        _orbit_rows(g, orbits, k_sample),
        cfg_hash,
    )
    meta.update(
        {
            "n_orbits": len(orbits),
            "n_max": args.nmax,
            "k_sample": k_sample,
            "classes_per_length": {
                str(n): sum(1 for p in orbits if p.n == n)
                for n in range(1, args.nmax + 1)
            },
        }
    )
    path = os.path.join(args.out, "meta.json")
    _write_json(path, meta)
    return path


_DISPATCH = {
    "spectrum": _cmd_spectrum,
    "trace-check": _cmd_trace_check,
    "secular-scan": _cmd_secular_scan,
    "wkb-compare": _cmd_wkb_compare,
    "orbits": _cmd_orbits,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = _make_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        os.makedirs(args.out, exist_ok=True)
        g, input_sha, params, cfg_hash = _load(args)
        meta = _meta_base(args, g, input_sha, params, cfg_hash)
        report_path = _DISPATCH[args.command](args, g, meta, cfg_hash)
        # Timing is attached after the fact so reproducibility comparisons
        # can strip exactly one well-known key.
        with open(report_path, "r", encoding="utf-8") as f:
            payload = json.load(f)
        payload["timing"] = {"wall_time_s": time.perf_counter() - started}
        _write_json(report_path, payload)
        return 0
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
