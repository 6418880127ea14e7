"""The seven downfolded Hamiltonians A1..A7 built from commutator streams.

Bracket streams are computed once per (H, sigma_ext) pair and graded by
perturbative order so the order-filtered variants A2 and A5 prune individual
contraction terms rather than whole operators.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .active import ActiveSpace, SigmaExt
from .errors import DomainError, ExportError
from .integrals import IntegralSet, SpinOrbitalHamiltonian, has_eightfold_symmetry, write_fcidump
from .noq import (graded_commutator, graded_fock, graded_hamiltonian, normal_order,
                  perturbative_filter, ph_to_physical_vacuum, scale_add)
from .reference import ReferenceFrame

VARIANTS = ("A1", "A2", "A3", "A4", "A5", "A6", "A7")

# (label, stream, prefactor, max perturbative order or None)
_TERMS = {
    "A1": (),
    "A2": (("[H_N,s]", "c1", 1.0, 2), ("[[F_N,s],s]", "f2", 0.5, 2)),
    "A3": (("[H_N,s]", "c1", 1.0, None),),
    "A4": (("[H_N,s]", "c1", 1.0, None), ("[[F_N,s],s]", "f2", 0.5, None)),
    "A5": (("[H_N,s]", "c1", 1.0, 3), ("[[H_N,s],s]", "c2", 0.5, 3),
           ("[[[F_N,s],s],s]", "f3", 1.0 / 6.0, 3)),
    "A6": (("[H_N,s]", "c1", 1.0, None), ("[[H_N,s],s]", "c2", 0.5, None)),
    "A7": (("[H_N,s]", "c1", 1.0, None), ("[[H_N,s],s]", "c2", 0.5, None),
           ("[[[F_N,s],s],s]", "f3", 1.0 / 6.0, None)),
}


def check_variant(name):
    if name not in VARIANTS:
        raise DomainError("unknown variant %r (expected one of %s)" % (name, ", ".join(VARIANTS)))
    return name


class BracketStreams:
    """Graded commutator streams shared by all variants of one (H, sigma) pair."""

    def __init__(self, H: SpinOrbitalHamiltonian, ref: ReferenceFrame, sigma: SigmaExt):
        self.H, self.ref, self.sigma = H, ref, sigma
        self._s = sigma.graded()

    @cached_property
    def h_n(self):
        return graded_hamiltonian(self.H, self.ref)

    @cached_property
    def f_n(self):
        return graded_fock(self.H, self.ref)

    @cached_property
    def c1(self):
        return graded_commutator(self.h_n, self._s, max_rank=3)

    @cached_property
    def c2(self):
        return graded_commutator(self.c1, self._s, max_rank=2)

    @cached_property
    def f1(self):
        return graded_commutator(self.f_n, self._s, max_rank=2)

    @cached_property
    def f2(self):
        return graded_commutator(self.f1, self._s, max_rank=3)

    @cached_property
    def f3(self):
        return graded_commutator(self.f2, self._s, max_rank=2)

    def term(self, stream, max_order):
        return perturbative_filter(getattr(self, stream), max_order).truncated(2)


@dataclass(frozen=True)
class DownfoldedHamiltonian:
    """Physical-vacuum scalar + one- + two-body tensors over active spin orbitals."""

    variant: str
    scalar: float
    one_body: np.ndarray
    two_body: np.ndarray
    active: ActiveSpace
    provenance: dict = field(default_factory=dict, compare=False)

    @property
    def m(self):
        return self.one_body.shape[0]

    def hermiticity_error(self):
        return max(float(np.max(np.abs(self.one_body - self.one_body.T), initial=0.0)),
                   float(np.max(np.abs(self.two_body - self.two_body.transpose(2, 3, 0, 1)), initial=0.0)))

    def antisymmetry_error(self):
        v = self.two_body
        return max(float(np.max(np.abs(v + v.transpose(1, 0, 2, 3)), initial=0.0)),
                   float(np.max(np.abs(v + v.transpose(0, 1, 3, 2)), initial=0.0)))

    def as_hamiltonian(self) -> SpinOrbitalHamiltonian:
        return SpinOrbitalHamiltonian(self.m, self.scalar, self.one_body, self.two_body)


def _restrict(scalar, one, two, active: ActiveSpace):
    idx = np.array(active.active_spin)
    return scalar, one[np.ix_(idx, idx)].copy(), two[np.ix_(idx, idx, idx, idx)].copy()


def _check_partition(sigma: SigmaExt, active: ActiveSpace, tol=0.0):
    if sigma.all_active_norm(active) > tol:
        raise DomainError("sigma_ext carries amplitudes with all indices active")


def build_variant(variant, H: SpinOrbitalHamiltonian, ref: ReferenceFrame, sigma: SigmaExt,
                  active: ActiveSpace, streams: BracketStreams | None = None,
                  provenance=None) -> DownfoldedHamiltonian:
    """Evaluate one effective-Hamiltonian variant and project it on the active space."""
    check_variant(variant)
    _check_partition(sigma, active)
    if streams is None:
        streams = BracketStreams(H, ref, sigma)
    terms = [(1.0, normal_order(H, ref))]
    if not sigma.is_zero():
        terms += [(c, streams.term(s, order)) for _, s, c, order in _TERMS[variant]]
    total = scale_add(terms).truncated(2)
    scalar, one, two = _restrict(*ph_to_physical_vacuum(total, ref), active)
    # symmetrize away roundoff-level asymmetry; the tensors are exactly Hermitian in theory
    one = 0.5 * (one + one.T)
    two = 0.5 * (two + two.transpose(2, 3, 0, 1))
    return DownfoldedHamiltonian(variant, scalar, one, two, active, dict(provenance or {}))


def variant_term_report(variant, H, ref, sigma: SigmaExt, active: ActiveSpace,
                        streams: BracketStreams | None = None):
    """Per-term norms and scalar (reference-energy) shifts of a variant."""
    check_variant(variant)
    _check_partition(sigma, active)
    streams = streams or BracketStreams(H, ref, sigma)
    rows = []
    for label, s, c, order in _TERMS[variant]:
        op = streams.term(s, order)
        rows.append({
            "term": label if order is None else "%s^(%d)" % (label, order),
            "prefactor": c,
            "scalar": c * op.scalar,
            "norm_rank1": c * float(np.linalg.norm(op.dense(1))) if op.parts.get(1) else 0.0,
            "norm_rank2": c * float(np.linalg.norm(op.dense(2))) if op.parts.get(2) else 0.0,
        })
    return rows


# ---------------------------------------------------------------------------
# FCIDUMP export
# ---------------------------------------------------------------------------

def spatial_integrals(heff: DownfoldedHamiltonian, tol=1e-10):
    """Spin-trace the active tensors to spatial (h, (pq|rs)); None if spin blocks differ."""
    h, v = heff.one_body, heff.two_body
    a, b = slice(0, None, 2), slice(1, None, 2)
    hs = h[a, a]
    eri = v[a, b, a, b].transpose(0, 2, 1, 3).copy()  # (pr|qs) = <pq|rs>, mixed spin
    same = eri.transpose(0, 2, 1, 3) - eri.transpose(0, 2, 3, 1)
    ok = (np.allclose(h[b, b], hs, atol=tol, rtol=0)
          and np.allclose(h[a, b], 0.0, atol=tol) and np.allclose(v[a, a, a, a], same, atol=tol, rtol=0)
          and np.allclose(v[b, b, b, b], same, atol=tol, rtol=0)
          and np.allclose(v[b, a, b, a], v[a, b, a, b].transpose(1, 0, 3, 2), atol=tol, rtol=0))
    return (hs, eri) if ok else None


def export_fcidump(heff: DownfoldedHamiltonian, path, *, spin_orbital=False, tol=1e-10):
    """Write the active-space Hamiltonian as FCIDUMP.

    Spin-symmetric tensors are written in spatial form (PERMSYM=1 when the
    two-electron tensor lacks 8-fold symmetry).  Otherwise ``spin_orbital``
    must be set; the file then carries SPINORB=1 and one orbital per spin
    orbital, with <pq|rs> = v/2 stored so that <pq||rs> is recovered.
    """
    n = len(heff.active.active_spatial)
    nelec = heff.active.n_active_electrons
    spatial = spatial_integrals(heff, tol)
    if spatial is not None:
        hs, eri = spatial
        ints = IntegralSet(n, nelec, 0, heff.scalar, hs, eri, ())
        write_fcidump(path, ints, permsym=8 if has_eightfold_symmetry(eri, tol) else 1)
        return path
    if not spin_orbital:
        raise ExportError("spin blocks differ; spatial FCIDUMP export impossible "
                          "(request the spin-orbital extension)")
    g = 0.5 * heff.two_body.transpose(0, 2, 1, 3)
    ints = IntegralSet(heff.m, nelec, 0, heff.scalar, heff.one_body, g, ())
    write_fcidump(path, ints, permsym=1)
    text = open(path).read().replace("PERMSYM=1,", "PERMSYM=1,\n  SPINORB=1,", 1)
    open(path, "w").write(text)
    return path


def read_effective_fcidump(path) -> SpinOrbitalHamiltonian:
    """Inverse of :func:`export_fcidump` (handles the SPINORB=1 extension)."""
    from .integrals import parse_fcidump, to_spin_orbitals

    spinorb = "SPINORB=1" in open(path).read().upper().replace(" ", "")
    ints = parse_fcidump(path)
    if not spinorb:
        return to_spin_orbitals(ints)
    g = ints.eri_spatial.transpose(0, 2, 1, 3)
    return SpinOrbitalHamiltonian(ints.n_orbitals, ints.core_energy, ints.h_spatial,
                                  g - g.transpose(0, 1, 3, 2))
