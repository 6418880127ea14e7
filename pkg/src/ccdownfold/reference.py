"""Reference determinant, Fock operator, MBPT(2) energy and natural orbitals."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, DomainError
from .integrals import SpinOrbitalHamiltonian

log = logging.getLogger(__name__)

DENOMINATOR_TOL = 1e-8


@dataclass(frozen=True)
class ReferenceFrame:
    occupied: tuple
    virtual: tuple
    e_ref: float
    fock: np.ndarray
    epsilon: np.ndarray

    @property
    def nocc(self):
        return len(self.occupied)

    @property
    def m(self):
        return len(self.occupied) + len(self.virtual)

    @property
    def o(self):
        return slice(0, self.nocc)

    @property
    def v(self):
        return slice(self.nocc, self.m)

    def max_offdiagonal_fock(self):
        f = self.fock
        return float(np.max(np.abs(f - np.diag(np.diag(f))))) if f.size else 0.0


@dataclass(frozen=True)
class Mbpt2Result:
    e2: float
    t2_first_order: np.ndarray  # [a, b, i, j]
    density: np.ndarray         # spatial, spin-summed
    natural_occupations: np.ndarray
    natural_orbital_coefficients: np.ndarray


def fock_matrix(h, v, nocc):
    return h + np.einsum("piqi->pq", v[:, :nocc, :, :nocc])


def build_reference(H: SpinOrbitalHamiltonian, n_electrons: int) -> ReferenceFrame:
    """Occupy the ``n_electrons`` lowest-index spin orbitals."""
    if n_electrons > H.m or n_electrons < 0:
        raise DomainError("cannot place %d electrons in %d spin orbitals" % (n_electrons, H.m))
    o = slice(0, n_electrons)
    fock = fock_matrix(H.h, H.v, n_electrons)
    e_ref = (H.scalar + np.trace(H.h[o, o])
             + 0.5 * np.einsum("ijij->", H.v[o, o, o, o]))
    fock.setflags(write=False)
    eps = np.diag(fock).copy()
    eps.setflags(write=False)
    return ReferenceFrame(tuple(range(n_electrons)), tuple(range(n_electrons, H.m)),
                          float(e_ref), fock, eps)


def doubles_denominator(ref: ReferenceFrame, tol=DENOMINATOR_TOL):
    eo, ev = ref.epsilon[ref.o], ref.epsilon[ref.v]
    d = eo[None, None, :, None] + eo[None, None, None, :] - ev[:, None, None, None] - ev[None, :, None, None]
    if d.size and np.min(np.abs(d)) < tol:
        raise DegeneracyError("vanishing MBPT(2) denominator (|d| < %g)" % tol)
    return d


def first_order_doubles(H: SpinOrbitalHamiltonian, ref: ReferenceFrame):
    o, v = ref.o, ref.v
    if ref.max_offdiagonal_fock() > 1e-8:
        log.warning("non-canonical reference (max |f_pq| = %.2e); using diagonal denominators",
                    ref.max_offdiagonal_fock())
    return H.v[v, v, o, o] / doubles_denominator(ref)


def mbpt2(H: SpinOrbitalHamiltonian, ref: ReferenceFrame) -> Mbpt2Result:
    o, v = ref.o, ref.v
    t2 = first_order_doubles(H, ref)
    e2 = 0.25 * np.einsum("ijab,abij->", H.v[o, o, v, v], t2)

    nocc, m = ref.nocc, ref.m
    d_so = np.zeros((m, m))
    d_so[o, o] = np.eye(nocc) - 0.5 * np.einsum("abik,abjk->ij", t2, t2)
    d_so[v, v] = 0.5 * np.einsum("acij,bcij->ab", t2, t2)
    density = d_so[0::2, 0::2] + d_so[1::2, 1::2]

    occ, vec = np.linalg.eigh(density)
    order = np.argsort(-occ, kind="stable")
    return Mbpt2Result(float(e2), t2, density, occ[order], vec[:, order])
