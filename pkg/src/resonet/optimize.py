"""Constrained minimization of the two vulnerability objectives.

Both problems run through one projected-gradient driver: steepest descent
with a Barzilai-Borwein initial step, Armijo backtracking along the
projected direction (monotone objective trajectory by construction), exact
Euclidean projections onto the constraint sets, and a projected-gradient
stopping rule. The weight problem projects onto the budget simplex with a
per-edge floor; the absorber problem onto the non-negative orthant
intersected with a weighted budget half-space (coupling counts n times).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .absorber import AbsorberProblem, coupled_vulnerability
from .errors import FeasibilityError, ResonetError
from .rng import make_rng
from .vulnerability import WeightProblem, vulnerability, vulnerability_gradient


@dataclass(frozen=True)
class OptOptions:
    max_iter: int = 2000
    tol: float = 1e-8
    armijo_c: float = 1e-4
    shrink: float = 0.5
    step_floor: float = 1e-16
    multi_start: int = 1
    seed: int = 0
    fd_step: float = 1e-6


@dataclass
class OptResult:
    """Outcome of one constrained minimization (best start, if several)."""

    w_star: np.ndarray
    c_star: float | None
    J0: float
    J_star: float
    iterates: list
    constraint_residual: float
    converged: bool
    percent_decrease: float
    n_iter: int
    starts: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "w_star": [float(x) for x in self.w_star],
            "c_star": None if self.c_star is None else float(self.c_star),
            "J0": float(self.J0),
            "J_star": float(self.J_star),
            "iterates": [float(x) for x in self.iterates],
            "constraint_residual": float(self.constraint_residual),
            "converged": bool(self.converged),
            "percent_decrease": float(self.percent_decrease),
            "n_iter": int(self.n_iter),
            "starts": [[float(a), float(b)] for a, b in self.starts],
        }


def percent_decrease(j0: float, j_star: float) -> float:
    """|J0 - J*| / J0 * 100."""
    if not j0 > 0:
        raise ValueError("initial objective must be positive")
    return abs(j0 - j_star) / j0 * 100.0


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------

def project_weights(w_raw: np.ndarray, w_tot: float, w_min: float) -> np.ndarray:
    """Euclidean projection onto {w : sum(w) = w_tot, w >= w_min}.

    Shifts by the floor and projects the remainder onto the simplex of mass
    w_tot - m * w_min via sort-and-threshold; exact feasibility on return.
    """
    w_raw = np.asarray(w_raw, float)
    m = w_raw.shape[0]
    if m == 0:
        if w_tot != 0.0:
            raise FeasibilityError("no edges but a nonzero weight budget")
        return w_raw.copy()
    mass = w_tot - m * w_min
    if mass < 0:
        raise FeasibilityError(f"budget {w_tot} below m*w_min = {m * w_min}")
    x = _project_simplex(w_raw - w_min, mass)
    return x + w_min


def _project_simplex(v: np.ndarray, mass: float) -> np.ndarray:
    """Projection onto {x >= 0, sum(x) = mass} (sort-and-threshold)."""
    if mass == 0.0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - mass
    idx = np.arange(1, v.shape[0] + 1)
    cond = u - cssv / idx > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = cssv[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_absorber(w_raw: np.ndarray, c_raw: float, budget: float, n: int):
    """Projection onto {w >= 0, c >= 0, sum(w) + n c <= budget}.

    Clipping to the orthant is the projection when the budget then holds;
    otherwise the optimum sits on the budget facet and reduces to a
    weighted simplex projection (the coupling variable carries weight n).
    """
    if budget < 0:
        raise FeasibilityError(f"budget must be >= 0, got {budget}")
    w = np.maximum(np.asarray(w_raw, float), 0.0)
    c = max(float(c_raw), 0.0)
    if float(np.sum(w)) + n * c <= budget:
        return w, c
    y = np.concatenate([np.asarray(w_raw, float), [float(c_raw)]])
    d = np.ones(y.shape[0])
    d[-1] = float(n)
    x = _project_weighted_facet(y, d, budget)
    return x[:-1], float(x[-1])


def _project_weighted_facet(y: np.ndarray, d: np.ndarray, budget: float) -> np.ndarray:
    """Projection onto {x >= 0, d . x = budget}: x = max(y - t d, 0).

    t is located by scanning the breakpoints y_i / d_i in descending order;
    within the right active set t solves the budget equation exactly.
    """
    ratios = y / d
    order = np.argsort(ratios)[::-1]
    dy = d * y
    dd = d * d
    s_dy = 0.0
    s_dd = 0.0
    t = None
    for rank in range(order.shape[0]):
        i = order[rank]
        s_dy += dy[i]
        s_dd += dd[i]
        t_candidate = (s_dy - budget) / s_dd
        nxt = ratios[order[rank + 1]] if rank + 1 < order.shape[0] else -math.inf
        if nxt <= t_candidate:
            t = t_candidate
            break
    if t is None:
        t = (s_dy - budget) / s_dd
    return np.maximum(y - t * d, 0.0)


# ---------------------------------------------------------------------------
# Projected gradient driver
# ---------------------------------------------------------------------------

def _pgd(x0, fun, grad, project, opts: OptOptions):
    """Monotone projected gradient descent.

    Returns (x, J, trajectory, converged, iterations). `converged` is True
    on the projected-gradient test or when the line search reaches the step
    floor (stationary to working precision); False only at the iteration cap.
    """
    x = project(np.asarray(x0, float))
    j = fun(x)
    traj = [j]
    g = grad(x)
    scale = max(float(np.linalg.norm(x)), 1.0)
    alpha = scale * 0.01 / max(float(np.linalg.norm(g)), 1e-30)
    x_prev = None
    g_prev = None
    converged = False
    iters = 0
    for it in range(opts.max_iter):
        iters = it + 1
        if x_prev is not None:
            s = x - x_prev
            yv = g - g_prev
            sy = float(s @ yv)
            if sy > 1e-30:
                alpha = float(s @ s) / sy
            alpha = min(max(alpha, 1e-12 * scale), 1e12 * scale)
        pg_norm = float(np.linalg.norm(project(x - g) - x))
        if pg_norm <= opts.tol * max(1.0, abs(j)):
            converged = True
            break
        d = project(x - alpha * g) - x
        gd = float(g @ d)
        if gd >= 0.0 or not np.any(d):
            # no feasible descent direction left at working precision
            converged = True
            break
        t = 1.0
        j_new = None
        while True:
            j_cand = fun(x + t * d)
            if j_cand <= j + opts.armijo_c * t * gd:
                j_new = j_cand
                break
            t *= opts.shrink
            if t * float(np.linalg.norm(d)) < opts.step_floor * scale:
                break
        if j_new is None:
            converged = True
            break
        x_prev, g_prev = x, g
        x = x + t * d
        j = j_new
        traj.append(j)
        g = grad(x)
    return x, j, traj, converged, iters


def _run_multistart(x_init, fun, grad, project, opts: OptOptions, random_start):
    """Start 0 is x_init; further starts come from random_start(rng)."""
    x0 = project(np.asarray(x_init, float))
    j0 = fun(x0)
    best = None
    starts = []
    for s in range(max(1, opts.multi_start)):
        if s == 0:
            xs = x0
        else:
            xs = project(random_start(make_rng(opts.seed, stream=(s,))))
        x, j, traj, conv, iters = _pgd(xs, fun, grad, project, opts)
        starts.append((fun(xs), j))
        if best is None or j < best[1]:
            best = (x, j, traj, conv, iters)
    x, j, traj, conv, iters = best
    return x0, j0, x, j, traj, conv, iters, starts


# ---------------------------------------------------------------------------
# Problem-specific drivers
# ---------------------------------------------------------------------------

def optimize_weights(problem: WeightProblem, options: OptOptions | None = None) -> OptResult:
    """Re-allocate main-network edge weights to minimize the vulnerability."""
    opts = options or OptOptions()
    m = problem.graph.m

    def project(w):
        return project_weights(w, problem.w_tot, problem.w_min)

    def random_start(rng):
        return rng.exponential(scale=max(problem.w_tot, 1.0) / max(m, 1), size=m)

    x0, j0, w_star, j_star, traj, conv, iters, starts = _run_multistart(
        problem.graph.weights, lambda w: vulnerability(problem, w),
        lambda w: vulnerability_gradient(problem, w), project, opts, random_start)
    resid = _weight_residual(w_star, problem.w_tot, problem.w_min)
    return OptResult(w_star=w_star, c_star=None, J0=j0, J_star=j_star,
                     iterates=traj, constraint_residual=resid, converged=conv,
                     percent_decrease=percent_decrease(j0, j_star),
                     n_iter=iters, starts=starts)


def _weight_residual(w, w_tot, w_min):
    if w.size == 0:
        return 0.0
    return max(abs(float(np.sum(w)) - w_tot), max(0.0, w_min - float(np.min(w))))


def optimize_absorber(problem: AbsorberProblem, options: OptOptions | None = None) -> OptResult:
    """Tune auxiliary weights and coupling jointly under the shared budget.

    The gradient is central finite differences on the residue objective
    (step fd_step * max(1, |x_i|) per coordinate).
    """
    opts = options or OptOptions()
    n = problem.n
    m = problem.w_aux.shape[0]

    def fun(x):
        return coupled_vulnerability(problem, w_aux=x[:m], c=float(x[m]))

    def grad(x):
        g = np.empty(m + 1)
        for i in range(m + 1):
            step = opts.fd_step * max(1.0, abs(float(x[i])))
            xp = x.copy()
            xp[i] += step
            xm = x.copy()
            xm[i] = max(xm[i] - step, 0.0)  # objective undefined below zero
            denom = xp[i] - xm[i]
            g[i] = (fun(xp) - fun(xm)) / denom
        return g

    def project(x):
        w, c = project_absorber(x[:m], float(x[m]), problem.budget, n)
        return np.concatenate([w, [c]])

    def random_start(rng):
        raw = rng.exponential(scale=problem.budget / max(m + n, 1), size=m + 1)
        return raw

    x_init = np.concatenate([problem.w_aux, [problem.c]])
    x0, j0, x_star, j_star, traj, conv, iters, starts = _run_multistart(
        x_init, fun, grad, project, opts, random_start)
    w_star, c_star = x_star[:m], float(x_star[m])
    resid = _absorber_residual(w_star, c_star, problem.budget, n)
    return OptResult(w_star=w_star, c_star=c_star, J0=j0, J_star=j_star,
                     iterates=traj, constraint_residual=resid, converged=conv,
                     percent_decrease=percent_decrease(j0, j_star),
                     n_iter=iters, starts=starts)


def _absorber_residual(w, c, budget, n):
    neg = max(0.0, -float(np.min(w))) if w.size else 0.0
    return max(neg, max(0.0, -c),
               max(0.0, float(np.sum(w)) + n * c - budget))


# ---------------------------------------------------------------------------
# Parameter studies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StudyBase:
    """Baseline instance parameters for one-at-a-time sweeps."""

    n: int = 30
    n_e: int = 225
    w_p: float = 0.3
    w_min: float = 1e-3
    epsilon: float = 10.0
    gamma: float = 1e-6
    h: float = 0.1
    graph_kind: str = "complete"  # complete | incomplete
    method: str = "weights"       # weights | absorber
    r_m: float = 5.0
    gamma_aux: float = 1e-6
    aux_kind: str = "complete"    # mirrored | complete


SWEEPABLE = ("n", "n_e", "w_p", "w_min", "epsilon", "gamma", "h", "r_m", "gamma_aux")


def param_study(base: StudyBase, param: str, values, seed: int = 0,
                options: OptOptions | None = None) -> list:
    """One optimization per grid value; rows (param, value, %decrease, converged).

    Each point gets a fresh seeded instance. A run that fails to converge
    (or errors) is recorded with a zero percent decrease, mirroring how
    failed instances are conventionally plotted.
    """
    if param not in SWEEPABLE:
        raise ValueError(f"cannot sweep {param!r}; choose from {SWEEPABLE}")
    rows = []
    for i, val in enumerate(values):
        cfg = {**base.__dict__, param: val}
        point_seed = int(np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1)[0])
        try:
            pd, conv = _study_point(StudyBase(**cfg), point_seed, options)
        except ResonetError:
            pd, conv = 0.0, False
        rows.append((param, float(val), pd if conv else 0.0, conv))
    return rows


def _study_point(cfg: StudyBase, seed: int, options):
    from .absorber import absorber_problem_from_system, complete_aux, mirrored_aux
    from .graph_core import random_complete_graph, random_incomplete_graph
    from .response import CombinedSystem, MainSystem
    from .graph_core import DynamicsParams

    if cfg.graph_kind == "complete":
        g = random_complete_graph(int(cfg.n), cfg.w_p, seed)
    elif cfg.graph_kind == "incomplete":
        g = random_incomplete_graph(int(cfg.n), int(cfg.n_e), cfg.w_p, seed)
    else:
        raise ValueError(f"unknown graph kind {cfg.graph_kind!r}")
    if cfg.method == "weights":
        problem = WeightProblem(graph=g, epsilon=cfg.epsilon, gamma=cfg.gamma,
                                h=cfg.h, w_min=cfg.w_min)
        res = optimize_weights(problem, options)
        return res.percent_decrease, res.converged
    if cfg.method == "absorber":
        params = DynamicsParams(epsilon=cfg.epsilon, gamma=cfg.gamma)
        w_tot = float(np.sum(g.weights))
        if cfg.aux_kind == "mirrored":
            aux = mirrored_aux(g)
        else:
            aux = complete_aux(g.n, np.full(g.n * (g.n - 1) // 2,
                                            w_tot / (g.n * (g.n - 1) / 2)))
        sys = CombinedSystem(main=MainSystem(graph=g, params=params), aux=aux,
                             c=w_tot / (2.0 * g.n), gamma_aux=cfg.gamma_aux)
        problem = absorber_problem_from_system(sys, h=cfg.h, r_m=cfg.r_m)
        j_main = vulnerability(WeightProblem(graph=g, epsilon=cfg.epsilon,
                                             gamma=cfg.gamma, h=cfg.h,
                                             w_min=cfg.w_min))
        res = optimize_absorber(problem, options)
        # decreases are reported against the pre-attachment objective
        return percent_decrease(j_main, res.J_star), res.converged
    raise ValueError(f"unknown study method {cfg.method!r}")


def study_to_csv(rows) -> str:
    lines = ["param,value,percent_decrease,converged"]
    for param, value, pd, conv in rows:
        lines.append(f"{param},{value:.17g},{pd:.17g},{int(conv)}")
    return "\n".join(lines) + "\n"
