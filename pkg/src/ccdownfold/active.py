"""Active-space selection, internal/external amplitude split and sigma_ext."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .ccsd import ClusterAmplitudes
from .errors import DegeneracyError, DomainError
from .noq import NormalOrderedOperator, block_network
from .reference import ReferenceFrame

BOUNDARY_TOL = 1e-6


@dataclass(frozen=True)
class ActiveSpace:
    active_spatial: tuple
    n_active_electrons: int

    @property
    def active_spin(self):
        return tuple(sorted(2 * p + s for p in self.active_spatial for s in (0, 1)))

    @property
    def n_orbitals(self):
        return len(self.active_spatial)

    def mask(self, m):
        out = np.zeros(m, dtype=bool)
        out[list(self.active_spin)] = True
        return out

    @classmethod
    def from_list(cls, orbitals, ref: ReferenceFrame):
        orbs = tuple(sorted(set(int(p) for p in orbitals)))
        n = ref.m // 2
        if not orbs or orbs[0] < 0 or orbs[-1] >= n:
            raise DomainError("active orbital indices must lie in [0, %d)" % n)
        occ_spatial = set(i // 2 for i in ref.occupied)
        missing = occ_spatial - set(orbs)
        if missing:
            raise DomainError("occupied orbitals %s must be active" % sorted(missing))
        return cls(orbs, ref.nocc)


def select_active(ordering, n_active_orbitals, ref: ReferenceFrame, occupations=None,
                  tol=BOUNDARY_TOL) -> ActiveSpace:
    """Pick ``n_active_orbitals`` spatial orbitals.

    ``rhf-energy`` takes the lowest orbital energies, ``natural-occupation``
    the largest ``occupations`` (one per spatial orbital of the current basis).
    A tie across the active/inactive boundary is an error.
    """
    n = ref.m // 2
    n_occ = len(set(i // 2 for i in ref.occupied))
    if n_active_orbitals < n_occ:
        raise DomainError("active space of %d orbitals cannot hold %d occupied ones"
                          % (n_active_orbitals, n_occ))
    if n_active_orbitals > n:
        raise DomainError("only %d orbitals available" % n)
    if ordering == "rhf-energy":
        key = np.asarray(ref.epsilon[0::2], dtype=float)
    elif ordering == "natural-occupation":
        if occupations is None:
            raise DomainError("natural-occupation ordering needs occupations")
        key = -np.asarray(occupations, dtype=float)
    else:
        raise DomainError("unknown ordering %r" % ordering)
    order = np.argsort(key, kind="stable")
    if n_active_orbitals < n and abs(key[order[n_active_orbitals - 1]] - key[order[n_active_orbitals]]) < tol:
        raise DegeneracyError("degenerate orbitals straddle the active-space boundary; "
                              "give an explicit orbital list")
    return ActiveSpace.from_list(order[:n_active_orbitals], ref)


def _amplitude_masks(nocc, m, active: ActiveSpace):
    act = active.mask(m)
    ao, av = act[:nocc], act[nocc:]
    m1 = av[:, None] & ao[None, :]
    m2 = av[:, None, None, None] & av[None, :, None, None] & ao[None, None, :, None] & ao[None, None, None, :]
    return m1, m2


def split_external(T: ClusterAmplitudes, active: ActiveSpace) -> ClusterAmplitudes:
    """Zero the amplitudes whose indices are all active."""
    m = T.nocc + T.nvir
    m1, m2 = _amplitude_masks(T.nocc, m, active)
    return ClusterAmplitudes(np.where(m1, 0.0, T.t1), np.where(m2, 0.0, T.t2))


@dataclass(frozen=True)
class SigmaExt:
    """sigma_ext = T_ext - T_ext^dagger for singles and doubles."""

    t1: np.ndarray  # [a, i]
    t2: np.ndarray  # [a, b, i, j]

    @property
    def nocc(self):
        return self.t1.shape[1]

    @property
    def m(self):
        return self.t1.shape[0] + self.t1.shape[1]

    @cached_property
    def s1(self):
        o, v = slice(0, self.nocc), slice(self.nocc, self.m)
        s = np.zeros((self.m, self.m))
        s[v, o] = self.t1
        s[o, v] = -self.t1.T
        return s

    @cached_property
    def s2(self):
        o, v = slice(0, self.nocc), slice(self.nocc, self.m)
        s = np.zeros((self.m,) * 4)
        s[v, v, o, o] = self.t2
        s[o, o, v, v] = -self.t2.transpose(2, 3, 0, 1)
        return s

    def is_zero(self):
        return not (np.any(self.t1) or np.any(self.t2))

    def all_active_norm(self, active: ActiveSpace):
        m1, m2 = _amplitude_masks(self.nocc, self.m, active)
        return float(max(np.max(np.abs(self.t1[m1]), initial=0.0),
                         np.max(np.abs(self.t2[m2]), initial=0.0)))

    def graded(self):
        """{1: sigma_2, 2: sigma_1} as block-sparse normal-ordered operators."""
        m, nocc = self.m, self.nocc
        o, v = (0, nocc), (nocc, m)
        s2 = NormalOrderedOperator(m, nocc, 0.0, {2: (
            block_network(self.t2, [v, v, o, o]),
            block_network(-self.t2.transpose(2, 3, 0, 1), [o, o, v, v]))},
            grade=1, anti_hermitian=True)
        s1 = NormalOrderedOperator(m, nocc, 0.0, {1: (
            block_network(self.t1, [v, o]),
            block_network(-self.t1.T, [o, v]))},
            grade=2, anti_hermitian=True)
        return {1: s2, 2: s1}

    def operator(self):
        g = self.graded()
        return NormalOrderedOperator(self.m, self.nocc, 0.0, {2: g[1].parts[2], 1: g[2].parts[1]},
                                     anti_hermitian=True)


def build_sigma_ext(T_ext: ClusterAmplitudes) -> SigmaExt:
    return SigmaExt(np.array(T_ext.t1, dtype=float), np.array(T_ext.t2, dtype=float))
