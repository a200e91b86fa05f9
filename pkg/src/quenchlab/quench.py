"""Sudden-quench time evolution of the per-mode Bogoliubov amplitudes.

Each momentum mode evolves independently in the two-dimensional space spanned
by the doubly-occupied and empty ``(k, -k)`` states, where the post-quench
Hamiltonian block is

    [[ 2*eps,  2j*dlt],
     [-2j*dlt, -2*eps]]

The propagator is the exact matrix exponential ``exp(-i*H_k*t)``; since the
block squares to ``(2*sqrt(eps^2+dlt^2))^2 * I`` it has the closed form

    U = cos(Om*t)*I - 1j*sin(Om*t)/Om * H_k,   Om = 2*sqrt(eps^2+dlt^2)

with the removable singularity ``sin(Om*t)/Om -> t`` at gapless modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import ModelSpec, MomentumGrid, bogoliubov_amplitudes, momentum_grid

__all__ = ["QuenchProtocol", "EvolvedAmplitudes", "evolution_matrix", "evolve_amplitudes"]


def _sinc_omega(s, t):
    """sin(2*s*t)/(2*s) with the s -> 0 limit t; s >= 0."""
    s = np.asarray(s, dtype=float)
    safe = np.where(s > 0.0, s, 1.0)
    return np.where(s > 0.0, np.sin(2.0 * s * t) / (2.0 * safe), t)


def evolution_matrix(epsilon, delta, t):
    """Entries ``(U11, U12, U21, U22)`` of the per-mode propagator at time t.

    The block is unitary with unit-modulus determinant; ``U21 = -U12`` and
    ``U22 = conj(U11)`` for real time.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    s = np.hypot(epsilon, delta)
    c = np.cos(2.0 * s * t)
    sn = _sinc_omega(s, t)  # sin(2st)/(2s)
    u11 = c - 2j * epsilon * sn
    u12 = 2.0 * delta * sn + 0j
    return u11, u12, -u12, np.conj(u11)


@dataclass(frozen=True)
class QuenchProtocol:
    """Initial/final model pair sharing one momentum grid."""

    model_initial: ModelSpec
    model_final: ModelSpec
    grid: MomentumGrid

    def mode_data(self):
        """Static per-mode data: (k, w, alpha0, beta0, eps1, dlt1)."""
        k, w = momentum_grid(self.grid)
        eps0, dlt0 = self.model_initial.epsilon_delta(k)
        alpha0, beta0 = bogoliubov_amplitudes(eps0, dlt0)
        eps1, dlt1 = self.model_final.epsilon_delta(k)
        return k, w, alpha0, beta0, eps1, dlt1


@dataclass(frozen=True)
class EvolvedAmplitudes:
    """Snapshot of the evolved amplitudes over one momentum grid."""

    t: float
    k: np.ndarray
    weight: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def unitarity_defect(self) -> float:
        return float(np.max(np.abs(np.abs(self.alpha) ** 2 + np.abs(self.beta) ** 2 - 1.0)))


def evolve_amplitudes(protocol: QuenchProtocol, t: float) -> EvolvedAmplitudes:
    """Amplitudes of the pre-quench ground state evolved to time ``t``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    k, w, a0, b0, eps1, dlt1 = protocol.mode_data()
    s = np.hypot(eps1, dlt1)
    c = np.cos(2.0 * s * t)
    sn = _sinc_omega(s, t)
    alpha = c * a0 - 2j * sn * (eps1 * a0 + 1j * dlt1 * b0)
    beta = c * b0 - 2j * sn * (-1j * dlt1 * a0 - eps1 * b0)
    return EvolvedAmplitudes(t=t, k=k, weight=w, alpha=alpha, beta=beta)


def static_amplitudes(model: ModelSpec, grid: MomentumGrid) -> EvolvedAmplitudes:
    """Ground-state amplitudes of ``model`` packaged as a t=0 snapshot."""
    k, w = momentum_grid(grid)
    eps, dlt = model.epsilon_delta(k)
    alpha, beta = bogoliubov_amplitudes(eps, dlt)
    return EvolvedAmplitudes(t=0.0, k=k, weight=w, alpha=np.asarray(alpha), beta=np.asarray(beta))
