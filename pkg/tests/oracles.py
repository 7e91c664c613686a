"""Independent reference computations used to freeze expected test values.

Everything here is built from first principles with numpy/scipy only — no
imports from the package under test — so that agreement between the two is
meaningful.
"""
from __future__ import annotations

import cmath
import itertools
import math
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq


def interval_delta_secular(length: float, strength: float, position: float) -> Callable[[float], float]:
    """Characteristic function for a Neumann interval with one point interaction.

    Matching cos(k x) on the left of the interaction against A cos(k (L - x))
    on the right gives the root condition

        F(k) = k sin(k L) - D cos(k x0) cos(k (L - x0)) = 0.
    """

    def f(k: float) -> float:
        return k * math.sin(k * length) - strength * math.cos(k * position) * math.cos(
            k * (length - position)
        )

    return f


def roots_on(f: Callable[[float], float], lo: float, hi: float, samples: int = 4001) -> List[float]:
    """All simple roots of f on [lo, hi] by sign-change bracketing plus brentq."""
    grid = np.linspace(lo, hi, samples)
    vals = [f(x) for x in grid]
    roots: List[float] = []
    for i in range(samples - 1):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(float(brentq(f, grid[i], grid[i + 1], xtol=1e-14)))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def delta_transition(strength: float, length: float, position: float, k: complex) -> Tuple[complex, complex, complex]:
    """Closed-form (trans, r_from, r_to) for one point interaction on an edge."""
    den = 2j * k - strength
    trans = 2j * k * cmath.exp(1j * k * length) / den
    r_from = strength * cmath.exp(2j * k * position) / den
    r_to = strength * cmath.exp(2j * k * (length - position)) / den
    return trans, r_from, r_to


def delta_transition_matrix(strength: float, length: float, position: float, k: complex) -> np.ndarray:
    trans, r_from, r_to = delta_transition(strength, length, position, k)
    return np.array([[trans, r_to], [r_from, trans]], dtype=complex)


def delta_eigenvalues(strength: float, length: float, k: complex) -> Tuple[complex, complex]:
    """Eigenvalues of the point-interaction transition matrix (any position)."""
    mu1 = cmath.exp(1j * k * length)
    mu2 = (2j * k + strength) / (2j * k - strength) * cmath.exp(1j * k * length)
    return mu1, mu2


def central_diff(f: Callable[[float], complex], x: float, h: float = 1e-4) -> complex:
    return (f(x + h) - f(x - h)) / (2.0 * h)


def smooth_action(w: Callable[[float], float], length: float, k: float) -> float:
    """Action integral of sqrt(k^2 - w(x)) over the edge."""
    val, _ = quad(lambda x: math.sqrt(k * k - w(x)), 0.0, length, epsabs=1e-13, epsrel=1e-13, limit=500)
    return val


def brute_classes(adj: np.ndarray, n: int) -> int:
    """Count cyclic-shift classes of closed admissible n-step direction words.

    adj[r, s] = 1 when step s -> r is admissible (rows index the target).
    A word (d_0, ..., d_{n-1}) is admissible when every consecutive pair and
    the wrap-around pair are; words are identified up to rotation.
    """
    size = adj.shape[0]
    seen = set()
    for word in itertools.product(range(size), repeat=n):
        ok = all(adj[word[(i + 1) % n], word[i]] for i in range(n))
        if not ok:
            continue
        canon = min(tuple(word[i:] + word[:i]) for i in range(n))
        seen.add(canon)
    return len(seen)


def _totient(m: int) -> int:
    out = m
    p = 2
    mm = m
    while p * p <= mm:
        if mm % p == 0:
            while mm % p == 0:
                mm //= p
            out -= out // p
        p += 1
    if mm > 1:
        out -= out // mm
    return out


def burnside_classes(adj: np.ndarray, n: int) -> int:
    """Cycle-class count via Burnside: (1/n) * sum_{d | n} phi(n/d) tr(A^d)."""
    total = 0
    a = adj.astype(np.int64)
    for d in range(1, n + 1):
        if n % d:
            continue
        total += _totient(n // d) * int(np.trace(np.linalg.matrix_power(a, d)))
    assert total % n == 0
    return total // n


def const_interval_ks(value: float, length: float, count: int) -> List[float]:
    """Neumann eigenvalue parameters sqrt((n pi / L)^2 + c) for a constant c."""
    return [math.sqrt((n * math.pi / length) ** 2 + value) for n in range(count)]


def attractive_delta_kappa(strength: float, length: float) -> float:
    """Decay rate of the single bound state of one attractive point interaction.

    For strength D < 0 centred on a Neumann interval the even bound state
    cosh(kappa x) gives 2 kappa tanh(kappa L / 2) = -D; the energy is -kappa^2.
    """
    d = -strength
    return float(brentq(lambda t: 2.0 * t * math.tanh(t * length / 2.0) - d, 1e-8, 50.0, xtol=1e-14))


def gaussian_moment(center: float, sigma: float, lo: float, hi: float) -> float:
    """Integral of exp(-(k - center)^2 / (2 sigma^2)) over [lo, hi]."""
    val, _ = quad(
        lambda k: math.exp(-((k - center) ** 2) / (2.0 * sigma * sigma)),
        lo,
        hi,
        epsabs=1e-13,
        epsrel=1e-13,
        limit=200,
    )
    return val
