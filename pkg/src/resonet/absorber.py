"""Vulnerability of a main network with an attached damping network.

With the main and auxiliary stiffness matrices sharing an eigenbasis, the
coupled response splits into scalar modes

    s_k(nu) = 1 / (-nu^2 + 2 i nu gamma w_k^2 + w_k^2 + c
              - c^2 / (-nu^2 + 2 i nu gamma~ w~_k^2 + w~_k^2 + c))

and the expected squared amplitude on the main network is

    J~ = (1/n^2) sum_{k,j} int s_k(nu) conj(s_k)(nu) rho_j(nu) dnu

with rho_j the attack-density component centered at the j-th main
frequency. Clearing fractions gives s_k = Dt(nu)/Q(nu) with
Q = D * Dt - c^2, a monic quartic whose roots at zero damping follow from a
quadratic in nu^2; a first-order damping perturbation (linearized_roots)
lifts them off the real axis and the integral is evaluated by residues.

The production evaluation keeps only the leading small-damping residue
terms, exactly like the closed form on the uncoupled network, so J~ at
c = 0 reduces to the main-network objective identically (not just
approximately). The full contour machinery (RationalIntegrand) is kept for
diagnostics and invariant checks; both degrade as damping approaches the
attack spread h, where the quadrature path takes over.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateRootsError, FeasibilityError, ResonetError
from .graph_core import WeightedGraph, complete_edges, laplacian_from_arrays
from .response import CombinedSystem
from .spectral import frequencies_from_eigenvalues, sym_eig
from .vulnerability import pair_integral_closed

RESIDUE_DAMPING_LIMIT = 1e-2  # residues trusted while max(gamma, gamma~) <= limit * h
ROOT_SEPARATION_MIN = 1e-8
POLE_IMAG_MIN = 1e-14
AUX_PERTURB = 1e-7


class DampingApproximationWarning(UserWarning):
    """Residue evaluation requested outside its small-damping regime."""


@dataclass(frozen=True)
class AbsorberProblem:
    """Tuning problem for the attached damping network.

    The main network enters only through its natural frequencies (it is not
    modifiable here). Decision variables are the auxiliary edge weights
    (non-negative; zeros allowed) and the coupling weight c, under the
    budget sum(w_aux) + n*c <= r_m * w_tot.
    """

    omegas_main: np.ndarray
    aux_edges: tuple
    w_aux: np.ndarray
    c: float
    epsilon: float
    gamma: float
    gamma_aux: float
    h: float
    w_tot: float
    r_m: float

    def __post_init__(self):
        om = np.asarray(self.omegas_main, float)
        if om.size == 0 or np.any(om <= 0):
            raise ValueError("main frequency list must be non-empty and positive")
        om = om.copy()
        om.flags.writeable = False
        object.__setattr__(self, "omegas_main", om)
        w = np.asarray(self.w_aux, float).copy()
        if np.any(w < 0):
            raise ValueError("auxiliary weights must be >= 0")
        if len(self.aux_edges) != w.shape[0]:
            raise ValueError(
                f"{len(self.aux_edges)} auxiliary edges but {w.shape[0]} weights")
        w.flags.writeable = False
        object.__setattr__(self, "w_aux", w)
        if self.c < 0:
            raise ValueError("coupling weight must be >= 0")
        for name in ("epsilon", "gamma", "gamma_aux", "h", "w_tot"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.r_m < 0:
            raise ValueError("budget multiplier must be >= 0")
        used = float(np.sum(w)) + self.n * self.c
        if used > self.budget * (1.0 + 1e-9) + 1e-12:
            raise FeasibilityError(
                f"initial absorber uses {used:.6g} of budget {self.budget:.6g}")

    @property
    def n(self) -> int:
        return self.omegas_main.size

    @property
    def budget(self) -> float:
        return self.r_m * self.w_tot

    def aux_frequencies(self, w_aux=None) -> np.ndarray:
        w = self.w_aux if w_aux is None else np.asarray(w_aux, float)
        e = np.asarray(self.aux_edges, dtype=np.intp)
        if e.size:
            lap = laplacian_from_arrays(self.n, e[:, 0] - 1, e[:, 1] - 1, w)
        else:
            lap = np.zeros((self.n, self.n))
        eig = sym_eig(lap)
        return frequencies_from_eigenvalues(eig.values, self.epsilon)


def absorber_problem_from_system(sys: CombinedSystem, h: float,
                                 r_m: float | None = None,
                                 omegas_main: np.ndarray | None = None) -> AbsorberProblem:
    """Build the tuning problem matching an explicit combined system.

    r_m=None sizes the budget to exactly what the system already spends
    (useful when the problem is only evaluated, never optimized).
    """
    from .graph_core import laplacian

    if omegas_main is None:
        eig = sym_eig(laplacian(sys.main.graph))
        omegas_main = frequencies_from_eigenvalues(eig.values, sys.main.params.epsilon)
    w_tot = float(np.sum(sys.main.graph.weights))
    if r_m is None:
        used = float(np.sum(sys.aux.weights)) + sys.aux.n * sys.c
        r_m = used / w_tot
    return AbsorberProblem(
        omegas_main=omegas_main,
        aux_edges=sys.aux.edges,
        w_aux=sys.aux.weights,
        c=sys.c,
        epsilon=sys.main.params.epsilon,
        gamma=sys.main.params.gamma,
        gamma_aux=sys.gamma_aux,
        h=h,
        w_tot=w_tot,
        r_m=r_m,
    )


def mirrored_aux(main: WeightedGraph, w_aux=None) -> WeightedGraph:
    """Auxiliary graph that copies the main topology (weights optional)."""
    w = main.weights if w_aux is None else np.asarray(w_aux, float)
    return WeightedGraph(main.n, main.edges, w)


def complete_aux(n: int, w_aux) -> WeightedGraph:
    edges = tuple(complete_edges(n))
    w = np.asarray(w_aux, float)
    if w.ndim == 0:
        w = np.full(len(edges), float(w))
    return WeightedGraph(n, edges, w)


def mode_response(nu, omega_k: float, omega_aux_k: float, c: float,
                  gamma: float, gamma_aux: float):
    """Scalar coupled-mode transfer s_k(nu); vectorized over nu."""
    nu = np.asarray(nu, dtype=complex)
    w2 = omega_k * omega_k
    wa2 = omega_aux_k * omega_aux_k
    inner = -nu * nu + 2j * nu * gamma_aux * wa2 + wa2 + c
    if np.any(inner == 0):
        raise ZeroDivisionError("auxiliary branch is exactly singular (gamma_aux = 0?)")
    out = 1.0 / (-nu * nu + 2j * nu * gamma * w2 + w2 + c - c * c / inner)
    return complex(out) if out.ndim == 0 else out


def linearized_roots(base_roots, dq_dgamma, gamma: float) -> np.ndarray:
    """First-order root shifts of a monic polynomial in one parameter.

    base_roots are the (pairwise distinct) roots at parameter zero;
    dq_dgamma evaluates the parameter derivative of the polynomial at a
    given root. Returns base + gamma * shift per root.
    """
    base = np.asarray(base_roots, dtype=complex)
    k = base.size
    if k > 1:
        sep = np.abs(base[:, None] - base[None, :])
        sep[np.diag_indices(k)] = np.inf
        if float(sep.min()) <= ROOT_SEPARATION_MIN:
            raise DegenerateRootsError(
                f"base roots too close (min separation {float(sep.min()):.3e})")
    out = np.empty(k, dtype=complex)
    for j in range(k):
        prod = 1.0 + 0.0j
        for l in range(k):
            if l != j:
                prod *= base[j] - base[l]
        out[j] = base[j] - gamma * complex(dq_dgamma(base[j])) / prod
    return out


def zero_damping_roots(omega_k: float, omega_aux_k: float, c: float):
    """Real roots of the coupled quartic at zero damping, via nu^2 quadratic.

    Returns (roots, u_plus, u_minus) with roots = [s+, -s+, s-, -s-].
    """
    a = omega_k * omega_k + c
    b = omega_aux_k * omega_aux_k + c
    disc = math.hypot(a - b, 2.0 * c)
    u_plus = 0.5 * (a + b + disc)
    u_minus = 0.5 * (a + b - disc)
    if u_minus <= 0.0:
        # algebraically impossible for positive frequencies; numerical guard
        raise DegenerateRootsError("coupled quartic lost a positive root pair")
    s_p = math.sqrt(u_plus)
    s_m = math.sqrt(u_minus)
    return np.array([s_p, -s_p, s_m, -s_m]), u_plus, u_minus


@dataclass(frozen=True)
class RationalIntegrand:
    """Rational function with simple poles, for contour integration.

    numer: complex polynomial coefficients, highest degree first.
    poles: simple poles; the denominator is lead * prod(nu - p).
    Degree condition deg(denom) >= deg(numer) + 2 guarantees the closing
    arc vanishes and the full-plane residue sum is zero.
    """

    numer: np.ndarray
    poles: np.ndarray
    lead: complex = 1.0

    def __post_init__(self):
        numer = np.asarray(self.numer, dtype=complex)
        poles = np.asarray(self.poles, dtype=complex)
        if poles.size - (numer.size - 1) < 2:
            raise ValueError("denominator degree must exceed numerator degree + 1")
        if np.any(np.abs(poles.imag) < POLE_IMAG_MIN):
            raise DegenerateRootsError("pole on (or numerically on) the real axis")
        k = poles.size
        sep = np.abs(poles[:, None] - poles[None, :])
        sep[np.diag_indices(k)] = np.inf
        if float(sep.min()) == 0.0:
            raise DegenerateRootsError("repeated pole; residues assume simple poles")
        numer.flags.writeable = False
        poles.flags.writeable = False
        object.__setattr__(self, "numer", numer)
        object.__setattr__(self, "poles", poles)

    def residues(self) -> np.ndarray:
        res = np.empty(self.poles.size, dtype=complex)
        for i, p in enumerate(self.poles):
            prod = self.lead
            for l, q in enumerate(self.poles):
                if l != i:
                    prod *= p - q
            res[i] = np.polyval(self.numer, p) / prod
        return res

    def residue_sum(self) -> complex:
        return complex(np.sum(self.residues()))

    def integral_real_line(self, imag_rel_tol: float = 1e-8) -> float:
        res = self.residues()
        upper = self.poles.imag > 0
        total = 2j * math.pi * np.sum(res[upper])
        if abs(total.imag) > imag_rel_tol * max(abs(total.real), 1e-300):
            raise ResonetError(
                f"contour integral has imaginary residue {total.imag:.3e} "
                f"vs real part {total.real:.3e}: pole misclassification")
        return float(total.real)


def _damping_shifts(roots: np.ndarray, a: float, b: float, gamma_w2: float,
                    gamma_aux_wa2: float):
    """(prod_i, Im delta_i) per zero-damping root for the joint perturbation.

    The joint scale t multiplies both damping terms; dQ/dt at t=0 evaluated
    on a real root r is 2 i r (gamma w^2 (b - r^2) + gamma~ w~^2 (a - r^2)),
    purely imaginary, so the first-order shift is purely imaginary too.
    """
    prods = np.empty(4)
    shifts = np.empty(4)
    for i in range(4):
        r = roots[i]
        prod = 1.0
        for l in range(4):
            if l != i:
                prod *= r - roots[l]
        prods[i] = prod
        r2 = r * r
        shifts[i] = -2.0 * r * (gamma_w2 * (b - r2) + gamma_aux_wa2 * (a - r2)) / prod
    return prods, shifts


def _leading_terms(omega_k: float, omega_aux_k: float, c: float, gamma: float,
                   gamma_tilde: float, h: float):
    """Per-root leading residue weights for one coupled mode.

    Returns (roots, base, degenerate) such that the pair integral against a
    density centered at omega_j is sum_i base_i / ((roots_i - omega_j)^2 + h^2).
    Degenerate zero-damping roots (only possible approaching c = 0 with
    matched frequencies) are regularized by a relative 1e-7 shift of the
    auxiliary frequency and reported via the flag.
    """
    wa = omega_aux_k
    degenerate = False
    roots, _, _ = zero_damping_roots(omega_k, wa, c)
    if (roots[0] - roots[2]) <= ROOT_SEPARATION_MIN or 2.0 * roots[2] <= ROOT_SEPARATION_MIN:
        wa = wa + AUX_PERTURB * (1.0 + abs(wa))
        degenerate = True
        roots, _, _ = zero_damping_roots(omega_k, wa, c)
        if (roots[0] - roots[2]) <= ROOT_SEPARATION_MIN or 2.0 * roots[2] <= ROOT_SEPARATION_MIN:
            raise DegenerateRootsError(
                f"roots remain degenerate after regularization "
                f"(omega={omega_k}, omega_aux={omega_aux_k}, c={c})")
    a = omega_k * omega_k + c
    b = wa * wa + c
    prods, shifts = _damping_shifts(roots, a, b, gamma * omega_k * omega_k,
                                    gamma_tilde * wa * wa)
    if np.any(shifts <= 0.0):
        raise DegenerateRootsError(
            "a perturbed root failed to move into the upper half-plane; "
            "the pole set cannot be classified")
    base = h * (b - roots * roots) ** 2 / (prods * prods * shifts)
    return roots, base, degenerate


def coupled_pair_integral(omega_k: float, omega_aux_k: float, omega_j: float,
                          c: float, gamma: float, gamma_tilde: float, h: float,
                          _details: dict | None = None) -> float:
    """Leading small-damping residue value of int |s_k|^2 rho_j dnu.

    At c = 0 this reduces exactly (same algebra, same truncation) to the
    uncoupled closed form, so the coupled and uncoupled objectives agree
    identically on a disconnected system.
    """
    if min(omega_k, omega_aux_k, omega_j, gamma, gamma_tilde, h) <= 0:
        raise ValueError("frequencies, dampings, and spread must be positive")
    if c < 0:
        raise ValueError("coupling weight must be >= 0")
    if max(gamma, gamma_tilde) > RESIDUE_DAMPING_LIMIT * h:
        warnings.warn(
            f"max damping {max(gamma, gamma_tilde):.3e} above {RESIDUE_DAMPING_LIMIT:g}*h;"
            " residue value is outside its validity regime",
            DampingApproximationWarning, stacklevel=2)
    if _details is not None:
        _details.setdefault("degenerate", False)
        _details["method"] = "residue"
    if c == 0.0:
        if _details is not None:
            _details["method"] = "residue-uncoupled"
        return (h / math.pi) * pair_integral_closed(omega_k, omega_j, gamma, h)
    roots, base, degenerate = _leading_terms(omega_k, omega_aux_k, c, gamma,
                                             gamma_tilde, h)
    if _details is not None and degenerate:
        _details["degenerate"] = True
    return float(np.sum(base / ((roots - omega_j) ** 2 + h * h)))


def pair_rational_integrand(omega_k: float, omega_aux_k: float, omega_j: float,
                            c: float, gamma: float, gamma_tilde: float,
                            h: float) -> RationalIntegrand:
    """Full 10-pole rational integrand of the coupled pair integral.

    Used for diagnostics and the residue-sum-zero invariant; the production
    path (coupled_pair_integral) keeps only the leading residue terms.
    """
    w2 = omega_k * omega_k
    wa2 = omega_aux_k * omega_aux_k
    a = w2 + c
    b = wa2 + c
    roots, _, _ = zero_damping_roots(omega_k, omega_aux_k, c)

    def dq_dt(r):
        return 2j * r * (gamma * w2 * (b - r * r) + gamma_tilde * wa2 * (a - r * r))

    lifted = linearized_roots(roots, dq_dt, 1.0)
    if np.any(lifted.imag <= 0):
        raise DegenerateRootsError("linearized quartic root not in the upper half-plane")
    d_aux = np.array([-1.0, 2j * gamma_tilde * wa2, b], dtype=complex)
    d_aux_conj = np.array([-1.0, -2j * gamma_tilde * wa2, b], dtype=complex)
    numer = (h / math.pi) * np.polymul(d_aux, d_aux_conj)
    poles = np.concatenate([
        lifted, np.conj(lifted),
        np.array([omega_j + 1j * h, omega_j - 1j * h], dtype=complex),
    ])
    return RationalIntegrand(numer=numer, poles=poles, lead=1.0)


def _attack_density(nu, omega_j, h):
    return (h / math.pi) / ((omega_j - nu) ** 2 + h * h)


def coupled_pair_integral_quad(omega_k: float, omega_aux_k: float, omega_j: float,
                               c: float, gamma: float, gamma_tilde: float,
                               h: float, rel_target: float = 1e-6) -> float:
    """Brute-force quadrature of int |s_k|^2 rho_j dnu (any damping).

    Retries once with tighter panel tolerances before reporting failure
    (quad error estimates are conservative).
    """

    def integrand(nu):
        s = mode_response(complex(nu), omega_k, omega_aux_k, c, gamma, gamma_tilde)
        return (s.real * s.real + s.imag * s.imag) * _attack_density(nu, omega_j, h)

    roots, _, _ = zero_damping_roots(omega_k, omega_aux_k, c)
    # response peaks migrate from the coupled zero-damping roots (small
    # aux damping) to +-sqrt(omega_k^2 + c) when heavy aux damping freezes
    # the absorber; give quad every candidate as a breakpoint
    frozen = math.sqrt(omega_k * omega_k + c)
    aux_res = math.sqrt(omega_aux_k * omega_aux_k + c)
    peaks = sorted({float(r) for r in roots}
                   | {float(omega_j), frozen, -frozen, aux_res, -aux_res})
    width = 10.0 * max(h, 1.0)
    lo = min(peaks) - width
    hi = max(peaks) + width
    res_w = min(2000.0 * (gamma * omega_k ** 2 + gamma_tilde * omega_aux_k ** 2),
                10.0 * max(h, 1.0))
    bounds = {lo, hi}
    for p in peaks:
        bounds.add(max(lo, p - res_w))
        bounds.add(min(hi, p + res_w))
    cuts = sorted(bounds)

    def attempt(epsrel, limit):
        total = 0.0
        err = 0.0
        for a_, b_ in zip(cuts[:-1], cuts[1:]):
            if b_ <= a_:
                continue
            inner = [p for p in peaks if a_ < p < b_]
            v, e = quad(integrand, a_, b_, points=inner or None, limit=limit,
                        epsabs=0.0, epsrel=epsrel)
            total += v
            err += e
        for a_, b_ in ((hi, np.inf), (-np.inf, lo)):
            v, e = quad(integrand, a_, b_, limit=limit, epsrel=epsrel * 10)
            total += v
            err += e
        return total, err

    total, err = attempt(1e-10, 500)
    if not total > 0.0 or err > max(rel_target * abs(total), 1e-300):
        total, err = attempt(1e-12, 1000)
    if not total > 0.0 or err > max(rel_target * abs(total), 1e-300):
        from .errors import QuadratureError

        raise QuadratureError(
            f"coupled pair quadrature reached {err:.3e} absolute error "
            f"(target {rel_target:.1e} relative of {total:.6e})",
            estimate=total, error=err)
    return total


def coupled_vulnerability(problem: AbsorberProblem, w_aux=None, c=None,
                          gamma_aux=None, method: str = "residue",
                          quad_rel_target: float = 1e-6) -> float:
    """J~: expected squared main-network amplitude with the absorber attached.

    Ascending main and auxiliary frequencies are paired index by index (the
    shared-eigenbasis assumption). method "quadrature" integrates each pair
    numerically instead of using residues (slow; valid at any damping).
    """
    c_val = problem.c if c is None else float(c)
    g_aux = problem.gamma_aux if gamma_aux is None else float(gamma_aux)
    if c_val < 0:
        raise ValueError("coupling weight must be >= 0")
    if method not in ("residue", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    om = problem.omegas_main
    om_aux = problem.aux_frequencies(w_aux)
    n = om.size
    h = problem.h
    if method == "residue" and max(problem.gamma, g_aux) > RESIDUE_DAMPING_LIMIT * h:
        warnings.warn(
            f"max damping {max(problem.gamma, g_aux):.3e} above "
            f"{RESIDUE_DAMPING_LIMIT:g}*h; residue objective is outside its "
            "validity regime", DampingApproximationWarning, stacklevel=2)
    total = 0.0
    if method == "residue" and c_val == 0.0:
        for k in range(n):
            total += sum(
                (h / math.pi) * pair_integral_closed(om[k], om[j], problem.gamma, h)
                for j in range(n))
    elif method == "residue":
        for k in range(n):
            roots, base, _ = _leading_terms(om[k], om_aux[k], c_val,
                                            problem.gamma, g_aux, h)
            rho_den = (roots[:, None] - om[None, :]) ** 2 + h * h
            total += float(np.sum(base[:, None] / rho_den))
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DampingApproximationWarning)
            for k in range(n):
                for j in range(n):
                    total += coupled_pair_integral_quad(
                        om[k], om_aux[k], om[j], c_val, problem.gamma, g_aux, h,
                        rel_target=quad_rel_target)
    return total / (n * n)


def damping_sweep(problem: AbsorberProblem, gamma_aux_grid) -> list:
    """J~ per auxiliary-damping value; rows (gamma_aux, J~, method).

    Points with max(gamma, gamma_aux) above the residue validity limit are
    integrated by quadrature and flagged as such.
    """
    grid = np.asarray(gamma_aux_grid, float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("damping grid must be positive")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("damping grid must be strictly ascending")
    rows = []
    for g_aux in grid:
        use_quad = max(problem.gamma, float(g_aux)) > RESIDUE_DAMPING_LIMIT * problem.h
        val = coupled_vulnerability(
            problem, gamma_aux=float(g_aux),
            method="quadrature" if use_quad else "residue",
            quad_rel_target=1e-5)
        rows.append((float(g_aux), val, "quadrature" if use_quad else "residue"))
    return rows


def sweep_to_csv(rows) -> str:
    lines = ["gamma_aux,J_aux,method"]
    for g_aux, val, method in rows:
        lines.append(f"{g_aux:.17g},{val:.17g},{method}")
    return "\n".join(lines) + "\n"
