"""Truncated Fock-space helpers shared by the analytic and brute-force paths.

Single-mode operators use levels 0..dim-1 with <n-1|a|n> = sqrt(n); the
creation operator is the plain adjoint, so the transition out of the top
level is discarded.  Two-mode objects are Kronecker products with mode a as
the first factor: composite index = n_a * dim_b + n_b.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import CutoffTooSmall

#: Coherent-state tail mass allowed above the truncation level.
TAIL_BUDGET = 1e-10


def destroy(dim: int) -> np.ndarray:
    """Annihilation operator on a dim-level mode."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def poisson_tail(amplitude: complex, dim: int) -> float:
    """Probability mass of a coherent state |amplitude> on levels >= dim."""
    lam = abs(amplitude) ** 2
    if lam == 0.0:
        return 0.0
    # Stable upper sum: start from the log of the first discarded term.
    log_term = -lam + dim * math.log(lam) - math.lgamma(dim + 1)
    term = math.exp(log_term)
    total = 0.0
    n = dim
    while term > total * 1e-18 + 1e-300:
        total += term
        n += 1
        term *= lam / n
    return total


def check_tail(amplitude: complex, dim: int, label: str) -> None:
    tail = poisson_tail(amplitude, dim)
    if tail > TAIL_BUDGET:
        raise CutoffTooSmall(
            f"{label}: tail mass {tail:.3e} above level {dim - 1} exceeds "
            f"{TAIL_BUDGET:.0e}; raise the cutoff"
        )


def coherent_vector(amplitude: complex, dim: int) -> np.ndarray:
    """Truncated Fock expansion of |amplitude>, c_n = e^{-|v|^2/2} v^n / sqrt(n!)."""
    out = np.empty(dim, dtype=complex)
    out[0] = math.exp(-0.5 * abs(amplitude) ** 2)
    for n in range(1, dim):
        out[n] = out[n - 1] * amplitude / math.sqrt(n)
    return out
