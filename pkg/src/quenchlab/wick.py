"""Pauli strings, the Jordan-Wigner dictionary, Pfaffians and Wick contraction.

Spin operators are mapped onto ordered Majorana monomials through

    sigma^x_j = (prod_{m<j} sigma^z_m) A_j
    sigma^y_j = 1j * (prod_{m<j} sigma^z_m) B_j
    sigma^z_j = A_j B_j

with ``A_j = c_j + c_j^dag`` (Hermitian, A^2 = 1) and ``B_j = c_j - c_j^dag``
(anti-Hermitian, B^2 = -1).  The string factors are expanded as A_m B_m pairs,
the resulting product is brought to canonical order (site-major, A before B)
with fermionic sign bookkeeping, and identical adjacent factors are cancelled.
For parity-even strings all string tails below the support cancel, so the
monomial only references sites inside the support span.

Expectation values on the (Gaussian) evolved state follow from Wick's
theorem as the Pfaffian of the antisymmetric matrix of pairwise contractions
drawn from a :class:`~quenchlab.correlators.CorrelatorTable`:

    <A_i A_j> = f(i-j)    <B_i B_j> = h(i-j)
    <B_i A_j> = g(i-j)    <A_i B_j> = -g(j-i)

Symmetry-breaking (parity-odd) expectations are recovered from parity-even
ones by asymptotic factorization: the magnitude from the operator paired with
its own translate by R, the sign from pairing with a fixed reference order
parameter operator (uniform x for the XY family, staggered y for the cluster
family).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .correlators import CorrelatorTable, build_table
from .models import ClusterIsingModel, ModelSpec
from .quench import QuenchProtocol

__all__ = [
    "PauliString",
    "MajoranaMonomial",
    "pauli_to_majorana",
    "pfaffian",
    "symmetric_expectation",
    "broken_expectation",
    "signed_broken_expectation",
    "validity_horizon",
    "reference_operator",
]

#: Largest contraction matrix dimension accepted by :func:`pfaffian`.
PFAFFIAN_DIM_CAP = 512

#: <W> below this negative bound aborts instead of being clamped to zero.
CLAMP_TOL = 1e-9

_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class PauliString:
    """Tensor product of non-identity Pauli operators on distinct sites."""

    sites: tuple[int, ...]
    axes: tuple[str, ...]

    def __post_init__(self):
        if len(self.sites) != len(self.axes):
            raise ValueError("sites and axes must have equal length")
        if len(self.sites) == 0:
            raise ValueError("empty Pauli string (identity is handled upstream)")
        if list(self.sites) != sorted(set(self.sites)):
            raise ValueError(f"sites must be strictly ascending, got {self.sites}")
        for ax in self.axes:
            if ax not in _AXES:
                raise ValueError(f"unknown axis {ax!r}")

    @property
    def parity_odd(self) -> bool:
        """True iff the string anti-commutes with the z-parity operator."""
        return sum(ax in ("x", "y") for ax in self.axes) % 2 == 1

    @property
    def span(self) -> int:
        return self.sites[-1] - self.sites[0]

    def translate(self, shift: int) -> "PauliString":
        return PauliString(tuple(s + shift for s in self.sites), self.axes)

    def tensor(self, other: "PauliString") -> "PauliString":
        merged = sorted(zip(self.sites + other.sites, self.axes + other.axes))
        sites = tuple(s for s, _ in merged)
        if len(set(sites)) != len(sites):
            raise ValueError("tensor factors must have disjoint supports")
        return PauliString(sites, tuple(a for _, a in merged))

    def label(self) -> str:
        return "*".join(f"{ax}{s}" for s, ax in zip(self.sites, self.axes))


@dataclass(frozen=True)
class MajoranaMonomial:
    """Canonically ordered product ``prefactor * prod_i M_{site_i, species_i}``.

    ``species`` is 0 for A and 1 for B; factors are sorted site-major with A
    before B and contain no repeated factor.
    """

    prefactor: complex
    sites: tuple[int, ...]
    species: tuple[int, ...]

    def __len__(self):
        return len(self.sites)


def _canonicalize(factors: list[tuple[int, int]], prefactor: complex) -> tuple[complex, list]:
    """Sort Majorana factors, tracking fermionic swap signs, and cancel pairs."""
    facs = list(factors)
    # insertion sort: each adjacent swap of distinct factors flips the sign
    for i in range(1, len(facs)):
        j = i
        while j > 0 and facs[j - 1] > facs[j]:
            facs[j - 1], facs[j] = facs[j], facs[j - 1]
            prefactor = -prefactor
            j -= 1
    # cancel identical adjacent pairs: A*A = 1, B*B = -1
    out: list[tuple[int, int]] = []
    for f in facs:
        if out and out[-1] == f:
            out.pop()
            if f[1] == 1:
                prefactor = -prefactor
        else:
            out.append(f)
    return prefactor, out


@lru_cache(maxsize=4096)
def _monomial_cached(sites: tuple[int, ...], axes: tuple[str, ...]) -> MajoranaMonomial:
    origin = sites[0]
    factors: list[tuple[int, int]] = []
    prefactor: complex = 1.0 + 0j
    cursor = origin  # string tails are expanded from the support origin
    for s, ax in zip(sites, axes):
        if ax == "z":
            factors.append((s, 0))
            factors.append((s, 1))
        else:
            for m in range(origin, s):
                factors.append((m, 0))
                factors.append((m, 1))
            if ax == "x":
                factors.append((s, 0))
            else:
                prefactor *= 1j
                factors.append((s, 1))
        cursor = s
    prefactor, facs = _canonicalize(factors, prefactor)
    return MajoranaMonomial(
        prefactor=prefactor,
        sites=tuple(f[0] for f in facs),
        species=tuple(f[1] for f in facs),
    )


def pauli_to_majorana(op: PauliString) -> MajoranaMonomial:
    """Canonical Majorana monomial of ``op``.

    For parity-even strings the result only references sites inside the
    support span; parity-odd strings leave an unpaired Jordan-Wigner tail that
    is truncated at the support origin (their direct expectation vanishes
    anyway, and the tensor of two odd strings regenerates the inner tail
    exactly).
    """
    return _monomial_cached(op.sites, op.axes)


def pfaffian(m: np.ndarray) -> complex:
    """Pfaffian of an even-dimensional antisymmetric matrix.

    Parlett-Reid elimination with partial pivoting, O(n^3); satisfies
    ``pfaffian(m)**2 == det(m)`` up to roundoff.
    """
    a = np.array(m)
    if a.dtype != np.float64:
        a = a.astype(complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if n % 2:
        raise ValueError(f"Pfaffian needs even dimension, got {n}")
    if n > PFAFFIAN_DIM_CAP:
        raise ValueError(f"dimension {n} exceeds cap {PFAFFIAN_DIM_CAP}")
    if n == 0:
        return 1.0 + 0j
    if np.max(np.abs(a + a.T)) > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise ValueError("matrix is not antisymmetric")
    pf = 1.0 + 0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            pf = -pf
        if a[k + 1, k] == 0.0:
            return 0.0 + 0j
        pf *= a[k, k + 1]
        if k + 2 < n:
            tau = a[k, k + 2:] / a[k, k + 1]
            a[k + 2:, k + 2:] += np.outer(tau, a[k + 2:, k + 1])
            a[k + 2:, k + 2:] -= np.outer(a[k + 2:, k + 1], tau)
    return complex(pf)


def contraction_matrix(mono: MajoranaMonomial, table: CorrelatorTable) -> np.ndarray:
    """Antisymmetric matrix of pairwise contractions of the monomial factors."""
    sites = np.asarray(mono.sites)
    species = np.asarray(mono.species)
    rm = table.r_max
    d = sites[:, None] - sites[None, :]
    if d.size and np.max(np.abs(d)) > rm:
        missing = int(np.max(np.abs(d)))
        raise IndexError(f"separation r={missing} outside table window |r| <= {rm}")
    is_a = species == 0
    aa = is_a[:, None] & is_a[None, :]
    bb = ~is_a[:, None] & ~is_a[None, :]
    ba = ~is_a[:, None] & is_a[None, :]
    m = np.where(
        aa, table.f[d + rm],
        np.where(bb, table.h[d + rm],
                 np.where(ba, table.g[d + rm] + 0j, -table.g[-d + rm])),
    )
    upper = np.triu(m, 1)
    return upper - upper.T


def _real_contraction(mono: MajoranaMonomial, table: CorrelatorTable):
    """Real antisymmetric contraction matrix plus its Pfaffian phase factor.

    Rescaling each A factor by exp(-i pi/4) and each B by exp(+i pi/4) makes
    every entry real: AA pairs become Im f, BB pairs -Im h, mixed pairs keep
    the real g. Pf(M) = Pf(D M D^T) / det(D), so the returned phase
    exp(-i pi (n_B - n_A) / 4) multiplies the real Pfaffian.
    """
    sites = np.asarray(mono.sites)
    species = np.asarray(mono.species)
    rm = table.r_max
    d = sites[:, None] - sites[None, :]
    if d.size and np.max(np.abs(d)) > rm:
        missing = int(np.max(np.abs(d)))
        raise IndexError(f"separation r={missing} outside table window |r| <= {rm}")
    is_a = species == 0
    aa = is_a[:, None] & is_a[None, :]
    bb = ~is_a[:, None] & ~is_a[None, :]
    ba = ~is_a[:, None] & is_a[None, :]
    m = np.where(
        aa, table.f.imag[d + rm],
        np.where(bb, -table.h.imag[d + rm],
                 np.where(ba, table.g[d + rm], -table.g[-d + rm])),
    )
    upper = np.triu(m, 1)
    n_b = int(np.sum(~is_a))
    n_a = len(mono) - n_b
    # n_b - n_a is even; exp(-i pi (n_b - n_a)/4) cycles with period 8
    phase = (1, -1j, -1, 1j)[((n_b - n_a) // 2) % 4]
    return upper - upper.T, phase


def symmetric_expectation(op: PauliString, table: CorrelatorTable) -> complex:
    """Expectation of a parity-even string on the evolved symmetric state."""
    if op.parity_odd:
        raise ValueError(
            f"{op.label()} anti-commutes with the parity operator; its symmetric "
            "expectation is identically zero (use broken_expectation)"
        )
    mono = pauli_to_majorana(op)
    if len(mono) % 2:
        return 0.0 + 0j
    matrix, phase = _real_contraction(mono, table)
    return mono.prefactor * phase * pfaffian(matrix)


def reference_operator(model: ModelSpec) -> PauliString:
    """Single-site order-parameter operator fixing the broken-state sign pattern."""
    if isinstance(model, ClusterIsingModel):
        return PauliString((0,), ("y",))
    return PauliString((0,), ("x",))


def _paired_expectation(op: PauliString, partner: PauliString, table: CorrelatorTable,
                        shift: int) -> float:
    w = op.tensor(partner.translate(shift))
    val = symmetric_expectation(w, table)
    return float(val.real)


def broken_expectation(op: PauliString, table: CorrelatorTable, R: int) -> float:
    """Magnitude of a parity-odd expectation via asymptotic factorization.

    Evaluates ``<op (x) translate(op, R)>`` and returns the non-negative square
    root.  ``R`` must exceed the support span so the two copies are disjoint.
    Roundoff-negative values are clamped to zero; values below ``-1e-9``
    abort, since they signal a bug rather than noise.
    """
    if not op.parity_odd:
        raise ValueError(f"{op.label()} commutes with parity; use symmetric_expectation")
    if R <= op.span:
        raise ValueError(f"R={R} does not separate supports of span {op.span}")
    val = _paired_expectation(op, op, table, R)
    if val < -CLAMP_TOL:
        raise RuntimeError(
            f"<W> = {val:.3e} for {op.label()} at R={R}: beyond the clamping tolerance"
        )
    return math.sqrt(max(val, 0.0))


#: Reference magnitudes below this mean the broken sector has decayed to the
#: Pfaffian noise floor; all odd expectations are then reported as zero.
REF_MAGNITUDE_FLOOR = 1e-6


def signed_broken_expectation(op: PauliString, table: CorrelatorTable, R: int,
                              ref: PauliString, ref_magnitude: float | None = None) -> float:
    """Signed parity-odd expectation on the maximally broken state.

    Evaluated as ``<op (x) ref_translated> / <ref>`` with the reference order
    parameter at distance R past the support origin, which keeps relative
    signs between different odd strings consistent and avoids the square-root
    noise amplification of the self-paired estimator near zero.  ``R`` should
    be even so staggered patterns pair with a positive product.
    """
    if not op.parity_odd:
        raise ValueError(f"{op.label()} commutes with parity; use symmetric_expectation")
    if R <= op.span:
        raise ValueError(f"R={R} does not separate supports of span {op.span}")
    if ref_magnitude is None:
        ref_magnitude = broken_expectation(ref, table, R)
    if ref_magnitude < REF_MAGNITUDE_FLOOR:
        return 0.0
    shift = op.sites[0] + R  # reference sits R sites past the support origin
    cross = _paired_expectation(op, ref, table, shift)
    return cross / ref_magnitude


def validity_horizon(op: PauliString, protocol: QuenchProtocol, times, R: int,
                     delta_R: int = 10, threshold: float = 1e-9) -> float:
    """First time the finite-R factorization stops being converged.

    Compares ``broken_expectation`` at ``R`` and ``R + delta_R`` on the given
    time grid and returns the first time their difference exceeds
    ``threshold`` (``math.inf`` if it never does).
    """
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    if delta_R <= 0:
        raise ValueError("delta_R must be > 0")
    r_need = R + delta_R + op.span + 1
    for t in times:
        table = build_table(protocol, float(t), r_need)
        d = abs(broken_expectation(op, table, R) - broken_expectation(op, table, R + delta_R))
        if d > threshold:
            return float(t)
    return math.inf
