"""Majorana two-point functions f, g, h and their distance-indexed tables.

With ``A_j = c_j + c_j^dag`` and ``B_j = c_j - c_j^dag`` the equal-time
contractions of the evolved state are translation invariant and depend on the
separation ``r = i - k`` only:

    f(r, t) = <A_r A_0>,   g(r, t) = <B_r A_0>,   h(r, t) = <B_r B_0>.

In terms of the evolved mode amplitudes (weights ``w_k`` are ``2/N`` on a
finite chain, the normalized (0, pi) quadrature in the thermodynamic limit):

    g(r, t) = sum_k w_k [ (|b|^2 - |a|^2) cos(kr) + 1j (a* b - a b*) sin(kr) ]
    f(r, t) = delta_{r,0} - 1j sum_k w_k (a* b + a b*) sin(kr)
    h(r, t) = f(r, t) - 2 delta_{r,0}

The sign of the f/h mode sum and the shared ``w_k`` prefactor are fixed by
exact agreement with brute-force diagonalization on finite chains (see the
test suite); g is real, while f - delta and h + delta are purely imaginary.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .quench import EvolvedAmplitudes, QuenchProtocol, evolve_amplitudes

__all__ = ["CorrelatorTable", "g_func", "f_func", "h_func", "build_table"]

#: Imaginary residues of g (or real residues of f - delta) above this abort.
RESIDUE_TOL = 1e-9


class ConventionError(RuntimeError):
    """A correlator violated its reality/parity structure beyond tolerance."""


def _mode_sums(amps: EvolvedAmplitudes, r):
    """Raw cos/sin reductions for separations ``r`` (array-valued)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    kr = np.outer(r, amps.k)
    a, b, w = amps.alpha, amps.beta, amps.weight
    occ = w * (np.abs(b) ** 2 - np.abs(a) ** 2)
    cross_g = w * 1j * (np.conj(a) * b - a * np.conj(b))
    cross_f = w * (np.conj(a) * b + a * np.conj(b))
    g = np.cos(kr) @ occ + np.sin(kr) @ cross_g
    fsum = -1j * (np.sin(kr) @ cross_f)
    return g, fsum


def g_func(amps: EvolvedAmplitudes, r: int) -> float:
    """Real contraction ``<B_r A_0>`` at the snapshot time."""
    g, _ = _mode_sums(amps, r)
    g = complex(g[0])
    if abs(g.imag) > RESIDUE_TOL:
        raise ConventionError(f"g({r}) has imaginary residue {g.imag:.3e}")
    return g.real


def f_func(amps: EvolvedAmplitudes, r: int) -> complex:
    """Contraction ``<A_r A_0>``; equals ``delta_{r,0}`` plus an imaginary part."""
    _, fsum = _mode_sums(amps, r)
    fsum = complex(fsum[0])
    if abs(fsum.real) > RESIDUE_TOL:
        raise ConventionError(f"f({r}) has real residue {fsum.real:.3e}")
    return (1.0 if r == 0 else 0.0) + 1j * fsum.imag


def h_func(amps: EvolvedAmplitudes, r: int) -> complex:
    """Contraction ``<B_r B_0>`` = ``f(r) - 2*delta_{r,0}``."""
    return f_func(amps, r) - (2.0 if r == 0 else 0.0)


@dataclass(frozen=True)
class CorrelatorTable:
    """f/g/h over the window ``|r| <= r_max``, indexed by signed separation."""

    t: float
    r_max: int
    f: np.ndarray  # complex, length 2*r_max+1, index r + r_max
    g: np.ndarray  # real
    h: np.ndarray  # complex

    def _idx(self, r: int) -> int:
        if abs(r) > self.r_max:
            raise IndexError(
                f"separation r={r} outside table window |r| <= {self.r_max}"
            )
        return r + self.r_max

    def f_at(self, r: int) -> complex:
        return complex(self.f[self._idx(r)])

    def g_at(self, r: int) -> float:
        return float(self.g[self._idx(r)])

    def h_at(self, r: int) -> complex:
        return complex(self.h[self._idx(r)])

    def to_csv(self) -> str:
        """CSV dump with header ``t,r,f_re,f_im,g,h_re,h_im``."""
        buf = io.StringIO()
        buf.write("t,r,f_re,f_im,g,h_re,h_im\n")
        for i, r in enumerate(range(-self.r_max, self.r_max + 1)):
            buf.write(
                "%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                % (self.t, r, self.f[i].real, self.f[i].imag, self.g[i],
                   self.h[i].real, self.h[i].imag)
            )
        return buf.getvalue()


def table_from_amplitudes(amps: EvolvedAmplitudes, r_max: int) -> CorrelatorTable:
    """Materialize all f/g/h values over ``|r| <= r_max`` in one grid pass."""
    if r_max < 0:
        raise ValueError("r_max must be >= 0")
    rs = np.arange(-r_max, r_max + 1)
    g, fsum = _mode_sums(amps, rs)
    if np.max(np.abs(g.imag)) > RESIDUE_TOL:
        raise ConventionError(
            f"g table has imaginary residue {np.max(np.abs(g.imag)):.3e} at t={amps.t}"
        )
    if np.max(np.abs(fsum.real)) > RESIDUE_TOL:
        raise ConventionError(
            f"f table has real residue {np.max(np.abs(fsum.real)):.3e} at t={amps.t}"
        )
    delta0 = (rs == 0).astype(float)
    f = delta0 + 1j * fsum.imag
    h = f - 2.0 * delta0
    return CorrelatorTable(t=amps.t, r_max=int(r_max), f=f, g=g.real, h=h)


def build_table(protocol: QuenchProtocol, t: float, r_max: int) -> CorrelatorTable:
    return table_from_amplitudes(evolve_amplitudes(protocol, t), r_max)
