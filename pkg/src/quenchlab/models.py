"""Model definitions: dispersions, momentum grids and static Bogoliubov amplitudes.

Two families of translation-invariant spin-1/2 chains are supported, both
solvable by a Jordan-Wigner mapping onto free fermions:

* the XY chain in a transverse field, parametrized by the anisotropy
  ``gamma`` and the field ``h`` (ordered phase for ``h < 1``);
* the N-cluster Ising chain, parametrized by the cluster size ``N`` and the
  mixing angle ``phi`` (ordered phase for ``phi >= pi/4``).

Each momentum mode ``k`` carries a pair of dispersion functions
``(epsilon(k), delta(k))`` and a normalized amplitude pair ``(alpha, beta)``
describing the ground-state superposition of the doubly-occupied and empty
``(k, -k)`` states.  By convention ``alpha`` is purely imaginary and ``beta``
is real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "XYModel",
    "ClusterIsingModel",
    "FiniteGrid",
    "ThermodynamicGrid",
    "dispersion",
    "ground_energy",
    "bogoliubov_amplitudes",
    "analytic_order_parameter",
    "momentum_grid",
]


@dataclass(frozen=True)
class XYModel:
    """XY chain in a transverse field."""

    gamma: float
    h: float

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.h < 0.0:
            raise ValueError(f"h must be >= 0, got {self.h}")

    @property
    def ordered(self) -> bool:
        return self.h < 1.0

    def epsilon_delta(self, k):
        return np.cos(k) - self.h, self.gamma * np.sin(k)

    def label(self) -> str:
        return f"xy(gamma={self.gamma:g},h={self.h:g})"


@dataclass(frozen=True)
class ClusterIsingModel:
    """N-cluster Ising chain: (N+2)-site cluster term competing with an Ising one."""

    cluster_size: int
    phi: float

    def __post_init__(self):
        if self.cluster_size < 1:
            raise ValueError(f"cluster_size must be >= 1, got {self.cluster_size}")
        if not 0.0 <= self.phi <= np.pi / 2:
            raise ValueError(f"phi must be in [0, pi/2], got {self.phi}")

    @property
    def ordered(self) -> bool:
        return self.phi >= np.pi / 4

    def epsilon_delta(self, k):
        n1 = self.cluster_size + 1
        cp, sp = np.cos(self.phi), np.sin(self.phi)
        return (
            np.cos(n1 * k) * cp - np.cos(k) * sp,
            np.sin(n1 * k) * cp + np.sin(k) * sp,
        )

    def label(self) -> str:
        return f"cluster(N={self.cluster_size},phi={self.phi:g})"


#: Either of the two model dataclasses.
ModelSpec = XYModel | ClusterIsingModel


def dispersion(model: ModelSpec, k):
    """Return ``(epsilon, delta)`` for momentum ``k`` (scalar or array)."""
    return model.epsilon_delta(k)


def ground_energy(epsilon, delta):
    """Per-mode ground-state energy ``-2*sqrt(epsilon**2 + delta**2)``."""
    return -2.0 * np.hypot(epsilon, delta)


def bogoliubov_amplitudes(epsilon, delta):
    """Ground-state amplitudes ``(alpha, beta)`` of a single momentum mode.

    ``alpha`` multiplies the doubly occupied state and is purely imaginary,
    ``beta`` multiplies the vacuum and is real; ``|alpha|^2 + |beta|^2 = 1``.
    The degenerate branch ``delta == 0`` is defined by continuity as the
    ``delta -> 0+`` limit: ``(0, 1)`` for ``epsilon >= 0`` (empty mode) and
    ``(-1j, 0)`` for ``epsilon < 0`` (doubly occupied mode).
    """
    epsilon = np.asarray(epsilon, dtype=float)
    delta = np.asarray(delta, dtype=float)
    root = np.hypot(epsilon, delta)
    num = epsilon - root
    norm = np.hypot(delta, num)
    safe = norm > 0.0
    norm_safe = np.where(safe, norm, 1.0)
    alpha = np.where(safe, 1j * num / norm_safe, np.where(epsilon < 0.0, -1j, 0.0))
    beta = np.where(safe, delta / norm_safe + 0j, np.where(epsilon < 0.0, 0.0, 1.0))
    if alpha.ndim == 0:
        return complex(alpha), complex(beta)
    return alpha, beta


def analytic_order_parameter(model: ModelSpec) -> float:
    """Closed-form order parameter inside the ordered phase.

    XY: ``2*[gamma^2*(1-h^2)]^{1/8} / sqrt(2*(1+gamma))`` (magnetization
    along x).  Cluster: ``(1 - tan(phi)^-2)^{(N+2)/8}`` (staggered
    magnetization along y).  Raises outside the ordered phase, where the
    order parameter is undefined.
    """
    if not model.ordered:
        raise ValueError(f"{model.label()} is outside its ordered phase")
    if isinstance(model, XYModel):
        return (
            2.0
            * (model.gamma**2 * (1.0 - model.h**2)) ** 0.125
            / np.sqrt(2.0 * (1.0 + model.gamma))
        )
    expo = (model.cluster_size + 2) / 8.0
    return (1.0 - np.tan(model.phi) ** -2.0) ** expo


@dataclass(frozen=True)
class FiniteGrid:
    """Antiperiodic (even parity sector) momentum grid of a finite chain.

    Modes are ``k = pi*(2m+1)/n_sites`` for ``m = 0 .. n_sites/2 - 1``, all in
    (0, pi), each with weight ``2/n_sites``.  With these weights a mode sum
    ``sum_k w_k F(k)`` carries exactly the ``2/N`` prefactor of the fermionic
    correlator formulas.
    """

    n_sites: int

    def __post_init__(self):
        if self.n_sites < 2 or self.n_sites % 2:
            raise ValueError(f"n_sites must be even and >= 2, got {self.n_sites}")

    def points(self):
        m = np.arange(self.n_sites // 2)
        k = np.pi * (2 * m + 1) / self.n_sites
        w = np.full_like(k, 2.0 / self.n_sites)
        return k, w


@dataclass(frozen=True)
class ThermodynamicGrid:
    """Quadrature discretization of the thermodynamic-limit integral over (0, pi).

    The mode sum with ``2/N`` prefactor becomes ``(1/pi) * integral_0^pi dk``;
    the returned weights absorb the ``1/pi`` so that downstream code treats
    finite and thermodynamic grids identically.
    """

    n_points: int = 4096
    rule: str = "midpoint"

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError(f"n_points must be >= 2, got {self.n_points}")
        if self.rule not in ("midpoint", "gauss-legendre"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")

    def points(self):
        if self.rule == "midpoint":
            j = np.arange(self.n_points)
            k = np.pi * (j + 0.5) / self.n_points
            w = np.full_like(k, 1.0 / self.n_points)
        else:
            x, wx = np.polynomial.legendre.leggauss(self.n_points)
            k = 0.5 * np.pi * (x + 1.0)
            w = 0.5 * wx  # pi/2 jacobian times 1/pi normalization
        return k, w


MomentumGrid = FiniteGrid | ThermodynamicGrid


def momentum_grid(spec: MomentumGrid):
    """Ordered ``(k, weight)`` arrays for a grid spec; ascending in k."""
    return spec.points()
