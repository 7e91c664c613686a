"""Global scattering assembly and the secular function.

The 2E x 2E vertex scattering matrix Sigma is block diagonal over vertices
when directed edges are grouped by their origin: the block at a vertex of
degree nu is (2/nu) J - I (J the all-ones matrix), i.e. backscatter
2/nu - 1 and cross-scattering 2/nu.  The edge transition matrix T(k) couples
only the direction pair {2e, 2e+1} of each edge:

    T[2e, 2e]     = r_from    T[2e, 2e+1]   = trans
    T[2e+1, 2e]   = trans     T[2e+1, 2e+1] = r_to

S(k) = Sigma T(k) is unitary for real k, and the eigenvalue condition is
det(I - S(k)) = 0.  The secular function

    zeta(k) = (det S)^(-1/2) det(I - S)

is real on the real axis once the square root's branch is fixed by
continuous unwrapping of the det S phase along the evaluation path; only its
zeros (not its global sign) carry meaning.  Theta(k) is the continuously
unwrapped phase of det T; its derivative is the Wigner delay.
"""

from __future__ import annotations

import cmath
import dataclasses
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .edge import transition_matrix, transition_matrix_dk
from .errors import NumericalError, PhaseTrackingError
from .graph import MetricGraph

__all__ = [
    "vertex_sigma",
    "big_sigma",
    "assemble_T",
    "assemble_S",
    "BranchState",
    "SecularValue",
    "secular",
    "secular_sweep",
    "theta_prime",
]

_PHASE_STEP_LIMIT = 0.9 * math.pi


def vertex_sigma(g: MetricGraph, v: str) -> np.ndarray:
    """deg x deg scattering block at vertex v: (2/deg) J - I."""
    deg = g.degree[v]
    return (2.0 / deg) * np.ones((deg, deg)) - np.eye(deg)


def big_sigma(g: MetricGraph) -> np.ndarray:
    """k-independent 2E x 2E vertex scattering matrix.

    Row d and column d' are coupled iff they leave the same vertex; the
    coupling maps the wave arriving along the reversal of d' into the wave
    leaving along d.
    """
    cached = getattr(g, "_sigma_cache", None)
    if cached is not None:
        return cached
    n = g.num_directed
    sigma = np.zeros((n, n))
    for v in g.vertices:
        dirs = g.out_directions(v)
        block = vertex_sigma(g, v)
        for a, da in enumerate(dirs):
            for b, db in enumerate(dirs):
                sigma[da, db] = block[a, b]
    g._sigma_cache = sigma
    return sigma


def edge_matrices(
    g: MetricGraph, k: complex, want_dk: bool = False
) -> Dict[int, Tuple[np.ndarray, Optional[np.ndarray]]]:
    """Per-edge 2x2 transition matrices (and optionally k-derivatives)."""
    out = {}
    for e in range(g.num_edges):
        t = transition_matrix(g, e, k)
        dt = transition_matrix_dk(g, e, k) if want_dk else None
        out[e] = (t.matrix, dt)
    return out


def _place(g: MetricGraph, blocks: Dict[int, np.ndarray]) -> np.ndarray:
    n = g.num_directed
    T = np.zeros((n, n), dtype=complex)
    for e, m in blocks.items():
        trans, r_to, r_from = m[0, 0], m[0, 1], m[1, 0]
        d = 2 * e
        T[d, d] = r_from
        T[d ^ 1, d ^ 1] = r_to
        T[d, d ^ 1] = trans
        T[d ^ 1, d] = trans
    return T


def assemble_T(g: MetricGraph, k: complex) -> np.ndarray:
    mats = edge_matrices(g, k)
    return _place(g, {e: m for e, (m, _) in mats.items()})


def assemble_S(g: MetricGraph, k: complex) -> np.ndarray:
    return big_sigma(g) @ assemble_T(g, k)


def unitarity_defect(m: np.ndarray) -> float:
    return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]), 2))


@dataclasses.dataclass
class SecularValue:
    k: complex
    zeta: complex
    det_s_phase: float  # unwrapped
    theta: float  # unwrapped phase of det T

    @property
    def zeta_real(self) -> float:
        return self.zeta.real


class BranchState:
    """Continuous phase tracking for det S and det T along a k path.

    Evaluations must walk a path with phase steps below pi; larger apparent
    jumps cannot be unwrapped reliably and raise PhaseTrackingError.
    """

    def __init__(self) -> None:
        self.started = False
        self._det_s_phase = 0.0
        self._theta = 0.0

    def _advance(self, attr: str, raw: float) -> float:
        prev = getattr(self, attr)
        step = math.remainder(raw - prev, 2.0 * math.pi)
        if self.started and abs(step) >= _PHASE_STEP_LIMIT:
            raise PhaseTrackingError(
                f"phase step {step:+.3f} too large; refine the k grid"
            )
        new = prev + step
        setattr(self, attr, new)
        return new

    def advance(self, det_s: complex, det_t: complex) -> Tuple[float, float]:
        phase_s = self._advance("_det_s_phase", cmath.phase(det_s))
        theta = self._advance("_theta", cmath.phase(det_t))
        self.started = True
        return phase_s, theta

    def clone(self) -> "BranchState":
        other = BranchState()
        other.started = self.started
        other._det_s_phase = self._det_s_phase
        other._theta = self._theta
        return other


def secular(g: MetricGraph, k: complex, state: BranchState) -> SecularValue:
    """zeta(k) with branch continuation through ``state``.

    The state must be advanced along a path of sufficiently small steps
    starting from the first evaluation (which anchors the branch).
    """
    T = assemble_T(g, k)
    S = big_sigma(g) @ T
    det_s = complex(np.linalg.det(S))
    det_t = complex(np.linalg.det(T))
    if det_s == 0:
        raise NumericalError(f"det S vanishes at k={k}; prefactor undefined")
    phase_s, theta = state.advance(det_s, det_t)
    # Full (det S)^(-1/2) with the branch fixed by the tracked phase; the
    # modulus factor is 1 on the real axis and restores conjugate symmetry
    # zeta(conj k) = conj zeta(k) off it.
    prefactor = abs(det_s) ** -0.5 * cmath.exp(-0.5j * phase_s)
    zeta = prefactor * complex(np.linalg.det(np.eye(g.num_directed) - S))
    return SecularValue(complex(k), zeta, phase_s, theta)


def secular_sweep(g: MetricGraph, ks: Sequence[float]) -> List[SecularValue]:
    """Sequential sweep with a fresh branch anchored at the first point."""
    state = BranchState()
    return [secular(g, k, state) for k in ks]


def theta_prime(g: MetricGraph, k: float) -> float:
    """d Theta / dk at real k, via the per-edge trace identity.

    d/dk log det T = sum_e tr(t_e^{-1} t_e'), which is invariant under the
    simultaneous row/column layout choice, so the 2x2 display matrices are
    used directly.  The result is real for real k; the imaginary residue is
    a numerical check discarded here.
    """
    total = 0.0 + 0.0j
    for e, (t, dt) in edge_matrices(g, k, want_dk=True).items():
        det = t[0, 0] * t[1, 1] - t[0, 1] * t[1, 0]
        tr_adj_dt = (
            t[1, 1] * dt[0, 0]
            - t[0, 1] * dt[1, 0]
            - t[1, 0] * dt[0, 1]
            + t[0, 0] * dt[1, 1]
        )
        total += tr_adj_dt / det
    return (total / 1j).real
