"""Steady-state responses, Monte Carlo vulnerability estimates, simulation.

The closed-form steady state of
    x'' + 2 gamma K x' + K x = f exp(i nu t),  K = L + epsilon I
is x_s exp(i nu t) with x_s = (-nu^2 I + 2 i nu gamma K + K)^{-1} f. For a
main network coupled vertex-to-vertex to an auxiliary network with stiffness
weight c on the links, the same holds blockwise and we keep the main half.

Monte Carlo draws attack episodes in batches of independent seeded streams
and averages ||x_s||^2; the reduction order is fixed so a (seed, N, batch)
triple always reproduces the same estimate bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .attack import AttackModel, sample_attack_batch
from .errors import ResonetError
from .graph_core import DynamicsParams, WeightedGraph, laplacian, stiffness
from .rng import make_rng
from .spectral import EigenDecomposition, frequencies_from_eigenvalues, sym_eig

MC_BATCH = 100_000


@dataclass(frozen=True)
class MainSystem:
    """A main network with its dynamics parameters."""

    graph: WeightedGraph
    params: DynamicsParams


@dataclass(frozen=True)
class CombinedSystem:
    """Main network plus a same-size auxiliary network coupled one-to-one.

    The coupling adds stiffness c >= 0 on every vertex pair (k, k~); the
    auxiliary network has its own damping multiplier but shares epsilon.
    """

    main: MainSystem
    aux: WeightedGraph
    c: float
    gamma_aux: float

    def __post_init__(self):
        if self.aux.n != self.main.graph.n:
            raise ResonetError(
                f"auxiliary vertex count {self.aux.n} != main {self.main.graph.n}")
        if self.c < 0:
            raise ResonetError(f"coupling weight must be >= 0, got {self.c}")
        if not self.gamma_aux > 0:
            raise ResonetError(f"auxiliary damping must be > 0, got {self.gamma_aux}")


@dataclass(frozen=True)
class AmplitudeTrace:
    """Simulated squared amplitude against the closed-form steady state.

    ratio is the pointwise ||x(t)||^2 / ||x_s||^2. The steady envelope is
    the max of ||x(t)||^2 over the final forcing period; envelope_ref is the
    closed form's own cycle peak (== ||x_s||^2 in the small-damping limit),
    so envelope/envelope_ref -> 1 once the transient has died.
    """

    t: np.ndarray
    norms2: np.ndarray
    ref: float
    ratio: np.ndarray
    envelope: float
    envelope_ref: float
    settled: bool
    dt: float

    def to_csv(self) -> str:
        lines = ["t,norm2,ratio"]
        for ti, ni, ri in zip(self.t, self.norms2, self.ratio):
            lines.append(f"{ti:.17g},{ni:.17g},{ri:.17g}")
        return "\n".join(lines) + "\n"


def _main_eig(system: MainSystem) -> EigenDecomposition:
    return sym_eig(laplacian(system.graph))


def steady_state(g: WeightedGraph, p: DynamicsParams, f: np.ndarray, nu: float,
                 method: str = "eigen",
                 eig: EigenDecomposition | None = None) -> np.ndarray:
    """Complex steady-state amplitude of the main-network dynamics.

    method "eigen" works in the Laplacian eigenbasis (reusable across nu via
    the `eig` argument); "solve" assembles and solves the linear system
    directly. The two paths are independent implementations and agree to
    ~1e-12; tests exploit that.
    """
    f = np.asarray(f, float)
    if method == "eigen":
        if eig is None:
            eig = sym_eig(laplacian(g))
        om2 = eig.values + p.epsilon
        fhat = eig.vectors.T @ f
        denom = -nu * nu + 2j * nu * p.gamma * om2 + om2
        return eig.vectors @ (fhat / denom)
    if method == "solve":
        k = stiffness(g, p)
        a = -nu * nu * np.eye(g.n) + 2j * nu * p.gamma * k + k
        return np.linalg.solve(a, f.astype(complex))
    raise ValueError(f"unknown method {method!r}")


def _combined_matrix(sys: CombinedSystem, nu: float) -> np.ndarray:
    n = sys.main.graph.n
    p = sys.main.params
    k_main = stiffness(sys.main.graph, p)
    k_aux = laplacian(sys.aux)
    k_aux[np.diag_indices(n)] += p.epsilon
    s = np.zeros((2 * n, 2 * n), dtype=complex)
    eye = np.eye(n)
    s[:n, :n] = 2j * nu * p.gamma * k_main + k_main + (sys.c - nu * nu) * eye
    s[n:, n:] = 2j * nu * sys.gamma_aux * k_aux + k_aux + (sys.c - nu * nu) * eye
    s[:n, n:] = -sys.c * eye
    s[n:, :n] = -sys.c * eye
    return s


def steady_state_combined(sys: CombinedSystem, f: np.ndarray, nu: float) -> np.ndarray:
    """Main-network block of the combined steady state (full 2n solve)."""
    n = sys.main.graph.n
    rhs = np.zeros(2 * n, dtype=complex)
    rhs[:n] = np.asarray(f, float)
    sol = np.linalg.solve(_combined_matrix(sys, nu), rhs)
    return sol[:n]


class _MainSolver:
    """Batched ||x_s||^2 in the (precomputed) Laplacian eigenbasis."""

    def __init__(self, system: MainSystem):
        eig = _main_eig(system)
        self.vectors = eig.vectors
        self.om2 = eig.values + system.params.epsilon
        self.gamma = system.params.gamma

    def norms(self, f_batch, nus) -> np.ndarray:
        fhat = f_batch @ self.vectors
        nus2 = nus[:, None] ** 2
        den = ((self.om2[None, :] - nus2) ** 2
               + (2.0 * self.gamma * nus[:, None] * self.om2[None, :]) ** 2)
        return np.sum(fhat * fhat / den, axis=1)


class _CombinedSolver:
    """Batched complex solves of the 2n coupled system, chunked for memory."""

    def __init__(self, sys: CombinedSystem, chunk: int = 10_000):
        n = sys.main.graph.n
        p = sys.main.params
        self.n = n
        self.chunk = chunk
        self.k_main = stiffness(sys.main.graph, p)
        k_aux = laplacian(sys.aux)
        k_aux[np.diag_indices(n)] += p.epsilon
        self.k_aux = k_aux
        self.c = sys.c
        self.gamma = p.gamma
        self.gamma_aux = sys.gamma_aux

    def norms(self, f_batch, nus) -> np.ndarray:
        n = self.n
        size = f_batch.shape[0]
        out = np.empty(size)
        eye = np.eye(n)
        base = np.zeros((2 * n, 2 * n), dtype=complex)
        base[:n, :n] = self.k_main + self.c * eye
        base[n:, n:] = self.k_aux + self.c * eye
        base[:n, n:] = -self.c * eye
        base[n:, :n] = -self.c * eye
        damp = np.zeros((2 * n, 2 * n))
        damp[:n, :n] = 2.0 * self.gamma * self.k_main
        damp[n:, n:] = 2.0 * self.gamma_aux * self.k_aux
        eye2 = np.eye(2 * n)
        for lo in range(0, size, self.chunk):
            hi = min(lo + self.chunk, size)
            nu = nus[lo:hi]
            mats = (base[None, :, :]
                    + 1j * nu[:, None, None] * damp[None, :, :]
                    - (nu * nu)[:, None, None] * eye2[None, :, :])
            rhs = np.zeros((hi - lo, 2 * n), dtype=complex)
            rhs[:, :n] = f_batch[lo:hi]
            sol = np.linalg.solve(mats, rhs[:, :, None])[:, :n, 0]
            out[lo:hi] = np.sum(sol.real ** 2 + sol.imag ** 2, axis=1)
        return out


def monte_carlo_vulnerability(system, model: AttackModel, n_samples: int,
                              seed: int, batch: int = MC_BATCH,
                              keep_running: bool = False):
    """Mean and standard error of ||x_s||^2 over seeded attack episodes.

    Batch b draws from the independent stream (seed, b); the estimate is
    bit-reproducible for a fixed (seed, n_samples, batch) triple. With
    keep_running=True also returns [(count, running_mean), ...] per batch.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if isinstance(system, CombinedSystem):
        n = system.main.graph.n
        norms_fn = _CombinedSolver(system).norms
    elif isinstance(system, MainSystem):
        n = system.graph.n
        norms_fn = _MainSolver(system).norms
    else:
        raise TypeError("system must be MainSystem or CombinedSystem")

    total = 0.0
    total_sq = 0.0
    done = 0
    running = []
    b = 0
    while done < n_samples:
        size = min(batch, n_samples - done)
        rng = make_rng(seed, stream=(b,))
        f_batch, nus = sample_attack_batch(model, n, size, rng)
        vals = norms_fn(f_batch, nus)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        done += size
        b += 1
        if keep_running:
            running.append((done, total / done))
    mean = total / n_samples
    if n_samples > 1:
        var = max(total_sq - n_samples * mean * mean, 0.0) / (n_samples - 1)
        stderr = math.sqrt(var / n_samples)
    else:
        stderr = math.nan
    if keep_running:
        return mean, stderr, running
    return mean, stderr


def _system_matrices(system):
    """(stiff, damp, norm_dim) of the real first-order form."""
    if isinstance(system, MainSystem):
        k = stiffness(system.graph, system.params)
        return k, 2.0 * system.params.gamma * k, system.graph.n
    if isinstance(system, CombinedSystem):
        n = system.main.graph.n
        p = system.main.params
        k_main = stiffness(system.main.graph, p)
        k_aux = laplacian(system.aux)
        k_aux[np.diag_indices(n)] += p.epsilon
        eye = np.eye(n)
        stiff = np.zeros((2 * n, 2 * n))
        stiff[:n, :n] = k_main + system.c * eye
        stiff[n:, n:] = k_aux + system.c * eye
        stiff[:n, n:] = -system.c * eye
        stiff[n:, :n] = -system.c * eye
        damp = np.zeros((2 * n, 2 * n))
        damp[:n, :n] = 2.0 * p.gamma * k_main
        damp[n:, n:] = 2.0 * system.gamma_aux * k_aux
        return stiff, damp, n
    raise TypeError("system must be MainSystem or CombinedSystem")


def _steady_amplitude(system, f, nu):
    if isinstance(system, MainSystem):
        return steady_state(system.graph, system.params, f, nu)
    return steady_state_combined(system, f, nu)


def integrate_forced(stiff, damp, f, nu, dt, n_steps, x0, v0, stride=1,
                     norm_dim=None, record_state=False):
    """RK4 run of x'' + damp x' + stiff x = f cos(nu t); aborts on blow-up.

    Returns (t, norms2, x, v[, xs, vs]). Raises ResonetError with the step
    index when the state stops being finite (dt too large).
    """
    norms, x, v, bad, xs, vs = _kernels.rk4_forced(
        stiff, damp, f, nu, dt, n_steps, x0, v0, stride=stride,
        norm_dim=norm_dim, record_state=record_state)
    if bad >= 0:
        raise ResonetError(
            f"integration diverged at recorded sample {bad} "
            f"(t = {bad * stride * dt:.6g}); reduce dt")
    t = np.arange(norms.shape[0]) * (stride * dt)
    if record_state:
        return t, norms, x, v, xs, vs
    return t, norms, x, v


def _cycle_peak_reference(x_s: np.ndarray) -> float:
    """Cycle peak of ||Re(x_s e^{i nu t})||^2 from the complex amplitude."""
    s = float(np.sum(np.abs(x_s) ** 2))
    return 0.5 * (s + abs(complex(np.sum(x_s * x_s))))


def simulate_dynamics(system, f, nu, dt=None, t_end=None, x0=None, v0=None,
                      settle_rel=1e-3, refine_tol=1e-4) -> AmplitudeTrace:
    """Integrate the real forced dynamics and normalize by the closed form.

    With dt=None, starts at one two-hundredth of the forcing period and
    halves it until the settled envelope changes by less than refine_tol
    (at most three halvings). The run stops early once the per-period
    envelope is stable to settle_rel over two consecutive periods AND the
    slowest transient mode has decayed below settle_rel of its start.
    """
    stiff, damp, norm_dim = _system_matrices(system)
    dim = stiff.shape[0]
    f = np.asarray(f, float)
    f_full = np.zeros(dim)
    f_full[:f.shape[0]] = f
    x0 = np.zeros(dim) if x0 is None else np.asarray(x0, float)
    v0 = np.zeros(dim) if v0 is None else np.asarray(v0, float)
    if nu <= 0:
        raise ValueError("forcing frequency must be positive for simulation")

    params = system.params if isinstance(system, MainSystem) else system.main.params
    period = 2.0 * math.pi / nu
    # slowest transient decay rate is gamma * min(omega^2) = gamma * epsilon
    rate = params.gamma * params.epsilon
    warmup = -math.log(settle_rel) / rate if rate > 0 else 0.0
    if t_end is None:
        t_end = max(warmup * 1.6, 20.0 * period)

    x_s = _steady_amplitude(system, f, nu)
    x_s_main = x_s[:norm_dim]
    ref = float(np.sum(np.abs(x_s_main) ** 2))
    env_ref = _cycle_peak_reference(x_s_main)

    def run(dt_use):
        steps_per_period = max(int(round(period / dt_use)), 1)
        dt_eff = period / steps_per_period
        n_periods = max(int(math.ceil(t_end / period)), 3)
        warm_periods = int(math.ceil(warmup / period))
        t_all = []
        n_all = []
        x, v = x0, v0
        envs = []
        settled = False
        for cycle in range(n_periods):
            t, norms, x, v = integrate_forced(
                stiff, damp, f_full, nu, dt_eff, steps_per_period, x, v,
                norm_dim=norm_dim)
            # integrate_forced restarts its clock each cycle; the chunk
            # length is exactly one forcing period, so cos(nu t) stays
            # phase-continuous. Offset the time axis and drop the
            # duplicated first sample on all cycles after the first.
            offset = cycle * period
            if cycle == 0:
                t_all.append(t + offset)
                n_all.append(norms)
            else:
                t_all.append(t[1:] + offset)
                n_all.append(norms[1:])
            envs.append(float(np.max(norms)))
            if len(envs) >= 3 and cycle >= warm_periods:
                e2, e1, e0 = envs[-3], envs[-2], envs[-1]
                scale = max(abs(e0), 1e-300)
                if abs(e0 - e1) <= settle_rel * scale and abs(e1 - e2) <= settle_rel * scale:
                    settled = True
                    break
        return (np.concatenate(t_all), np.concatenate(n_all), envs[-1],
                settled, dt_eff)

    if dt is not None:
        t, norms, env, settled, dt_eff = run(float(dt))
    else:
        dt_try = period / 200.0
        t, norms, env, settled, dt_eff = run(dt_try)
        for _ in range(3):
            dt_try /= 2.0
            t2, n2, env2, settled2, dt2 = run(dt_try)
            agree = abs(env2 - env) <= refine_tol * max(abs(env2), 1e-300)
            t, norms, env, settled, dt_eff = t2, n2, env2, settled2, dt2
            if agree:
                break

    ratio = norms / ref if ref > 0 else np.zeros_like(norms)
    return AmplitudeTrace(t=t, norms2=norms, ref=ref, ratio=ratio,
                          envelope=env, envelope_ref=env_ref,
                          settled=settled, dt=dt_eff)
