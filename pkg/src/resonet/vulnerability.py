"""Closed-form vulnerability of the main network and its weight gradient.

The expected squared steady-state amplitude under the stochastic attack
factors into a double sum over (response mode, attack center) pairs:

    J(w) = h / (2 gamma n^2) * sum_{k,j} bracket(omega_k, omega_j)
    bracket(x, y) = (h^2 + x^2 + y^2) / (x^4 * (h^4 + 2 h^2 (x^2+y^2) + (x^2-y^2)^2))

where {omega_k} are the natural frequencies of (topology, w, epsilon). The
bracket is the small-damping residue evaluation of the pair integral

    g(x, y) = int dnu / (((x^2-nu^2)^2 + (2 gamma nu x^2)^2) ((y-nu)^2 + h^2))
            ~= (pi / 2 gamma) * bracket(x, y)

valid for gamma << h; pair_integral_quad is the brute-force oracle for it.
The closed form's relative error grows like gamma * x^2 / h (it drops the
attack-density-peak residue), which the oracle tests quantify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import _kernels
from .errors import FeasibilityError, QuadratureError
from .graph_core import WeightedGraph, laplacian
from .spectral import frequencies_from_eigenvalues, sym_eig

EIG_GAP_FD_FALLBACK = 1e-8
FD_STEP = 1e-6


@dataclass(frozen=True)
class WeightProblem:
    """Weight re-allocation problem on a fixed main-network topology.

    The graph supplies the topology and the initial weight vector; w_tot is
    the conserved total weight (defaults to the initial sum) and w_min > 0
    the per-edge floor that preserves connectivity.
    """

    graph: WeightedGraph
    epsilon: float
    gamma: float
    h: float
    w_min: float
    w_tot: float | None = None

    def __post_init__(self):
        for name in ("epsilon", "gamma", "h"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.w_min > 0:
            raise ValueError("w_min must be > 0 (zero weights break topology)")
        if self.w_tot is None:
            object.__setattr__(self, "w_tot", float(np.sum(self.graph.weights)))
        if self.w_tot < self.graph.m * self.w_min:
            raise FeasibilityError(
                f"budget w_tot={self.w_tot} below m*w_min={self.graph.m * self.w_min}")


def pair_integral_closed(omega_k: float, omega_j: float, gamma: float, h: float) -> float:
    """Small-damping closed form of the pair integral; positive, ~1/gamma."""
    if min(omega_k, omega_j, gamma, h) <= 0:
        raise ValueError("all arguments must be positive")
    x2 = omega_k * omega_k
    y2 = omega_j * omega_j
    p = h**4 + 2.0 * h * h * (x2 + y2) + (x2 - y2) ** 2
    return (math.pi / (2.0 * gamma)) * (h * h + x2 + y2) / (x2 * x2 * p)


def pair_integral_quad(omega_k: float, omega_j: float, gamma: float, h: float,
                       rel_target: float = 1e-8) -> float:
    """Adaptive quadrature of the exact pair integral over the real line.

    Dense panels cover the two resonance peaks at +-omega_k (width
    ~gamma*omega_k^2) and the attack-density peak at omega_j (width h);
    the tails decay like nu^-6 and go to quad() directly. Raises
    QuadratureError when the combined error estimate misses rel_target.
    """
    if min(omega_k, omega_j, gamma, h) <= 0:
        raise ValueError("all arguments must be positive")
    x2 = omega_k * omega_k

    def integrand(nu):
        return 1.0 / (((x2 - nu * nu) ** 2 + (2.0 * gamma * nu * x2) ** 2)
                      * ((omega_j - nu) ** 2 + h * h))

    peaks = sorted({-omega_k, omega_k, omega_j})
    width = 10.0 * max(gamma * x2, h)
    lo = min(peaks) - width
    hi = max(peaks) + width
    # resonance windows get their own panels so quad sees the narrow spikes
    res_w = 2000.0 * gamma * x2
    bounds = {lo, hi}
    for c in peaks:
        bounds.add(c - res_w)
        bounds.add(c + res_w)
    cuts = sorted(b for b in bounds if lo <= b <= hi)
    total = 0.0
    err = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        inner = [c for c in peaks if a < c < b]
        v, e = quad(integrand, a, b, points=inner or None, limit=500,
                    epsabs=0.0, epsrel=1e-11)
        total += v
        err += e
    for a, b in (( hi, np.inf), (-np.inf, lo)):
        v, e = quad(integrand, a, b, limit=200, epsrel=1e-10)
        total += v
        err += e
    if not total > 0.0 or err > rel_target * abs(total):
        raise QuadratureError(
            f"pair integral quadrature reached {err:.3e} absolute error "
            f"(target {rel_target:.1e} relative of {total:.6e})",
            estimate=total, error=err)
    return total


def vulnerability_from_frequencies(omegas: np.ndarray, gamma: float, h: float) -> float:
    """Closed-form expected squared amplitude for a known frequency list."""
    omegas = np.asarray(omegas, float)
    n = omegas.size
    return h / (2.0 * gamma * n * n) * float(_kernels.pair_sum(omegas, h))


def _frequencies(problem: WeightProblem, w):
    g = problem.graph
    i_idx, j_idx = g.edge_arrays()
    from .graph_core import laplacian_from_arrays

    lap = laplacian_from_arrays(g.n, i_idx, j_idx, w)
    eig = sym_eig(lap)
    return eig, frequencies_from_eigenvalues(eig.values, problem.epsilon)


def vulnerability(problem: WeightProblem, w: np.ndarray | None = None) -> float:
    """J(w): closed-form expected squared steady-state amplitude."""
    w = problem.graph.weights if w is None else np.asarray(w, float)
    _, omegas = _frequencies(problem, w)
    return vulnerability_from_frequencies(omegas, problem.gamma, problem.h)


def vulnerability_gradient(problem: WeightProblem, w: np.ndarray | None = None) -> np.ndarray:
    """dJ/dw, analytic through the eigensystem where the spectrum is simple.

    Chain rule: dJ/dw_l = sum_k dJ/domega_k * (1 / 2 omega_k) * (v_{k,i} - v_{k,j})^2
    for edge l = (i, j). The eigenvalue derivative only holds for simple
    eigenvalues, so when the smallest spectral gap drops below
    EIG_GAP_FD_FALLBACK the whole gradient falls back to central finite
    differences on J (symmetric functions of the spectrum stay smooth even
    when individual eigenvalue paths cross).
    """
    g = problem.graph
    w = g.weights if w is None else np.asarray(w, float)
    if g.m == 0:
        return np.zeros(0)
    eig, omegas = _frequencies(problem, w)
    gaps = np.diff(eig.values)
    if gaps.size and float(np.min(gaps)) < EIG_GAP_FD_FALLBACK:
        return _fd_gradient(problem, w)
    n = omegas.size
    pref = problem.h / (2.0 * problem.gamma * n * n)
    d_sum = _kernels.pair_sum_grad(omegas, problem.h)
    u = pref * d_sum / (2.0 * omegas)
    i_idx, j_idx = g.edge_arrays()
    diff = eig.vectors[i_idx, :] - eig.vectors[j_idx, :]
    return (diff * diff) @ u


def _fd_gradient(problem: WeightProblem, w: np.ndarray) -> np.ndarray:
    grad = np.empty(w.shape[0])
    for l in range(w.shape[0]):
        step = FD_STEP * max(1.0, abs(float(w[l])))
        wp = w.copy()
        wp[l] += step
        wm = w.copy()
        wm[l] -= step
        grad[l] = (vulnerability(problem, wp) - vulnerability(problem, wm)) / (2.0 * step)
    return grad
