"""Reduced density matrices, the traceless broken part and trace distances.

For a subset S of l spins the reduction of any ground state
``u|e> + v|o>`` decomposes as

    rho(u, v, S) = rho_sym(S) + (u* v + v* u) * chi(S)

where ``rho_sym`` collects the parity-even Pauli basis elements weighted by
their symmetric expectations and ``chi`` the parity-odd ones weighted by the
signed broken-symmetry expectations.  The maximal local distinguishability is
half the absolute eigenvalue sum of ``chi``, attained between a symmetric and
a maximally broken ground state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .correlators import CorrelatorTable
from .wick import (
    PauliString,
    broken_expectation,
    signed_broken_expectation,
    symmetric_expectation,
)

__all__ = [
    "SpinSubset",
    "HorizonError",
    "enumerate_basis",
    "pauli_matrix",
    "build_rho_sym",
    "build_chi_tilde",
    "build_rho",
    "trace_distance",
    "max_distance",
    "max_distances",
]

DEFAULT_L_MAX = 4

_PAULI = {
    "1": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class HorizonError(RuntimeError):
    """Requested broken-symmetry data past the finite-R validity horizon."""


@dataclass(frozen=True)
class SpinSubset:
    """Ordered subset of relative spin positions."""

    sites: tuple[int, ...]

    def __post_init__(self):
        if list(self.sites) != sorted(set(self.sites)):
            raise ValueError(f"sites must be strictly ascending, got {self.sites}")
        if not 1 <= len(self.sites) <= DEFAULT_L_MAX:
            raise ValueError(
                f"subset size {len(self.sites)} outside 1..{DEFAULT_L_MAX}"
            )

    @property
    def l(self) -> int:
        return len(self.sites)

    @property
    def span(self) -> int:
        return self.sites[-1] - self.sites[0]

    def label(self) -> str:
        return "S(" + ",".join(map(str, self.sites)) + ")"


def enumerate_basis(subset: SpinSubset):
    """All 4^l Pauli basis assignments on the subset, in lexicographic order.

    Yields ``(axes, op, odd)`` where ``axes`` ranges over products of
    ``("1", "x", "y", "z")``, ``op`` is the PauliString on the non-identity
    sites (None for the pure identity) and ``odd`` is its parity class.
    """
    for axes in itertools.product("1xyz", repeat=subset.l):
        support = [(s, a) for s, a in zip(subset.sites, axes) if a != "1"]
        if not support:
            yield axes, None, False
            continue
        op = PauliString(tuple(s for s, _ in support), tuple(a for _, a in support))
        yield axes, op, op.parity_odd


def pauli_matrix(axes) -> np.ndarray:
    m = np.array([[1.0 + 0j]])
    for ax in axes:
        m = np.kron(m, _PAULI[ax])
    return m


def build_rho_sym(subset: SpinSubset, table: CorrelatorTable) -> np.ndarray:
    """Reduction of the evolved symmetric state onto the subset."""
    dim = 2 ** subset.l
    rho = np.zeros((dim, dim), dtype=complex)
    for axes, op, odd in enumerate_basis(subset):
        if odd:
            continue
        if op is None:
            rho += np.eye(dim)
            continue
        val = symmetric_expectation(op, table)
        if abs(val.imag) > 1e-9:
            raise RuntimeError(
                f"Hermitian string {op.label()} has imaginary expectation {val.imag:.3e}"
            )
        if abs(val):
            rho += val.real * pauli_matrix(axes)
    return rho / dim


def build_chi_tilde(subset: SpinSubset, table: CorrelatorTable, R: int,
                    ref: PauliString, t_star: float = np.inf,
                    allow_unconverged: bool = False,
                    ref_magnitude: float | None = None,
                    memo: dict | None = None) -> np.ndarray:
    """Traceless Hermitian broken part of the reduced density matrix.

    Parity-odd expectations come from asymptotic factorization at separation
    ``R`` with signs fixed by the reference order-parameter operator.  Values
    at ``t >= t_star`` are refused unless ``allow_unconverged`` is set.
    ``memo`` (keyed by Pauli string) shares signed expectations between
    overlapping subsets evaluated on the same table.
    """
    if table.t >= t_star and not allow_unconverged:
        raise HorizonError(
            f"t={table.t} is past the validity horizon t*={t_star}; "
            "pass allow_unconverged to override"
        )
    dim = 2 ** subset.l
    chi = np.zeros((dim, dim), dtype=complex)
    if ref_magnitude is None:
        ref_magnitude = broken_expectation(ref, table, R)
    for axes, op, odd in enumerate_basis(subset):
        if not odd:
            continue
        if memo is not None and op in memo:
            val = memo[op]
        else:
            val = signed_broken_expectation(op, table, R, ref, ref_magnitude)
            if memo is not None:
                memo[op] = val
        if val:
            chi += val * pauli_matrix(axes)
    return chi / dim


def build_rho(u: complex, v: complex, subset: SpinSubset, table: CorrelatorTable,
              R: int, ref: PauliString, **horizon_kwargs) -> np.ndarray:
    """Reduction of the general ground state ``u|e> + v|o>``."""
    norm = abs(u) ** 2 + abs(v) ** 2
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"|u|^2 + |v|^2 = {norm} is not normalized")
    cross = 2.0 * (np.conj(u) * v).real
    rho = build_rho_sym(subset, table)
    if cross:
        rho = rho + cross * build_chi_tilde(subset, table, R, ref, **horizon_kwargs)
    return rho


def trace_distance(rho_a: np.ndarray, rho_b: np.ndarray) -> float:
    """Half the absolute eigenvalue sum of the (Hermitian) difference."""
    if rho_a.shape != rho_b.shape:
        raise ValueError(f"dimension mismatch: {rho_a.shape} vs {rho_b.shape}")
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho_a - rho_b))))


def max_distance(subset: SpinSubset, table: CorrelatorTable, R: int,
                 ref: PauliString, **horizon_kwargs) -> float:
    """Maximal local distinguishability: half the |eigenvalue| sum of chi."""
    chi = build_chi_tilde(subset, table, R, ref, **horizon_kwargs)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(chi))))


def max_distances(subsets, table: CorrelatorTable, R: int, ref: PauliString,
                  **horizon_kwargs) -> list[float]:
    """max_distance for several subsets, sharing the reference magnitude and
    the signed expectations of Pauli strings common to overlapping subsets."""
    ref_magnitude = broken_expectation(ref, table, R)
    memo: dict = {}
    return [
        max_distance(s, table, R, ref, ref_magnitude=ref_magnitude, memo=memo,
                     **horizon_kwargs)
        for s in subsets
    ]
