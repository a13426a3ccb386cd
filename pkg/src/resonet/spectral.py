"""Symmetric eigendecomposition and natural-frequency extraction.

The eigensolver is cyclic Jacobi (see _kernels): robust at the dense scales
this package targets (n up to a few hundred) and orthogonal by construction,
which matters for the analytic weight gradients built on the eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConvergenceError
from .graph_core import DynamicsParams, WeightedGraph, laplacian


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues with orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class SpectrumReport:
    """Equal-width histogram of an eigenvalue list plus summary moments."""

    edges: np.ndarray
    counts: np.ndarray
    vmin: float
    vmax: float
    mean: float
    variance: float

    def to_csv(self) -> str:
        lines = ["bin_left,bin_right,count"]
        for left, right, c in zip(self.edges[:-1], self.edges[1:], self.counts):
            lines.append(f"{left:.17g},{right:.17g},{int(c)}")
        return "\n".join(lines) + "\n"


def sym_eig(mat: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a symmetric real matrix, values ascending."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    scale = float(np.max(np.abs(mat))) if mat.size else 0.0
    asym = float(np.max(np.abs(mat - mat.T))) if mat.size else 0.0
    if scale > 0.0 and asym > 1e-10 * scale:
        raise ValueError(f"matrix is not symmetric: max|M - M^T| = {asym:.3e}")
    vals, vecs, sweeps = _kernels.jacobi_eig(mat)
    if sweeps < 0:
        raise ConvergenceError(
            f"Jacobi sweeps exhausted ({_kernels.JACOBI_MAX_SWEEPS}) without "
            "reaching the off-diagonal tolerance; input is numerically pathological")
    order = np.argsort(vals, kind="stable")
    values = vals[order]
    vectors = vecs[:, order]
    values.flags.writeable = False
    vectors.flags.writeable = False
    return EigenDecomposition(values, vectors)


def frequencies_from_eigenvalues(lap_values: np.ndarray, epsilon: float) -> np.ndarray:
    """Natural frequencies sqrt(lambda + epsilon) of a Laplacian spectrum."""
    shifted = np.asarray(lap_values, float) + float(epsilon)
    if np.any(shifted <= 0.0):
        raise ValueError("epsilon too small: shifted eigenvalue <= 0")
    return np.sqrt(shifted)


def natural_frequencies(g: WeightedGraph, p: DynamicsParams) -> np.ndarray:
    """Ascending natural frequencies of the graph's second-order dynamics."""
    eig = sym_eig(laplacian(g))
    return frequencies_from_eigenvalues(eig.values, p.epsilon)


def spectrum_histogram(values: np.ndarray, bin_count: int) -> SpectrumReport:
    """Equal-width histogram spanning [min, max]; last bin right-inclusive."""
    values = np.asarray(values, float)
    if values.size == 0:
        raise ValueError("cannot histogram an empty value list")
    if bin_count < 1:
        raise ValueError(f"bin_count must be >= 1, got {bin_count}")
    vmin = float(np.min(values))
    vmax = float(np.max(values))
    if vmax > vmin:
        edges = np.linspace(vmin, vmax, bin_count + 1)
    else:
        # all values identical: pick a unit-width window so edges increase
        edges = np.linspace(vmin - 0.5, vmin + 0.5, bin_count + 1)
    counts, _ = np.histogram(values, bins=edges)
    return SpectrumReport(edges=edges, counts=counts, vmin=vmin, vmax=vmax,
                          mean=float(np.mean(values)),
                          variance=float(np.var(values)))
