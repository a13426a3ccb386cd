"""Stochastic adversary model.

The attacker drives one forcing pattern (a direction drawn uniformly from
the unit sphere) at one frequency per episode. The frequency is drawn from
an equal-weight mixture of heavy-tailed location-scale components, one
centered on each natural frequency of the targeted network, modeling an
attacker that aims for resonance but misses by a spread h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AttackModel:
    """Frequency spread h plus the natural frequencies the mixture targets."""

    h: float
    omegas: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omegas, float)
        if not self.h > 0:
            raise ValueError(f"spread h must be > 0, got {self.h}")
        if om.size == 0 or np.any(om <= 0):
            raise ValueError("need a non-empty list of positive frequencies")
        om = om.copy()
        om.flags.writeable = False
        object.__setattr__(self, "omegas", om)


@dataclass(frozen=True)
class ForcingSample:
    """One attack episode: unit forcing vector and forcing frequency."""

    f: np.ndarray
    nu: float


def sample_unit_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the unit sphere in R^n (normalized Gaussian)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    while True:
        f = rng.standard_normal(n)
        norm = float(np.linalg.norm(f))
        if norm >= 1e-300:
            return f / norm


def mixture_pdf(nu, model: AttackModel):
    """Density of the attack-frequency mixture at nu (scalar or array)."""
    nu = np.asarray(nu, float)
    h = model.h
    comp = (h / math.pi) / ((model.omegas - nu[..., None]) ** 2 + h * h)
    out = comp.mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def frequency_quantile(center: float, h: float, p: float) -> float:
    """Inverse CDF of one mixture component centered at `center`."""
    return center + h * math.tan(math.pi * (p - 0.5))


def _open_uniform(rng: np.random.Generator) -> float:
    # p in the open interval (0, 1): p = 0 would map to -inf
    while True:
        p = float(rng.random())
        if p > 0.0:
            return p


def sample_frequency(model: AttackModel, rng: np.random.Generator) -> float:
    """Two-stage draw: uniform center choice, then inverse-CDF tail draw."""
    k = int(rng.integers(model.omegas.size))
    return frequency_quantile(float(model.omegas[k]), model.h, _open_uniform(rng))


def sample_attack(model: AttackModel, n: int, rng: np.random.Generator) -> ForcingSample:
    """One forcing episode; draws the vector first, then the frequency."""
    f = sample_unit_vector(n, rng)
    nu = sample_frequency(model, rng)
    return ForcingSample(f=f, nu=nu)


def sample_attack_batch(model: AttackModel, n: int, size: int,
                        rng: np.random.Generator):
    """Vectorized batch of attack episodes.

    Returns (F, nus) with F of shape (size, n), rows unit-norm, and nus of
    shape (size,). Draw order is fixed (vectors, centers, tail draws), so a
    given generator state always yields the same batch.
    """
    f = rng.standard_normal((size, n))
    norms = np.linalg.norm(f, axis=1)
    bad = norms < 1e-300
    while np.any(bad):
        f[bad] = rng.standard_normal((int(bad.sum()), n))
        norms = np.linalg.norm(f, axis=1)
        bad = norms < 1e-300
    f /= norms[:, None]
    centers = model.omegas[rng.integers(model.omegas.size, size=size)]
    p = rng.random(size)
    zero = p <= 0.0
    while np.any(zero):
        p[zero] = rng.random(int(zero.sum()))
        zero = p <= 0.0
    nus = centers + model.h * np.tan(np.pi * (p - 0.5))
    return f, nus
