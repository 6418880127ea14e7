"""Numerical algebra of particle-hole normal-ordered operators.

A rank-k operator is stored through its antisymmetric coefficient tensor X,

    X_op = 1/(k!)^2  sum  X[p1..pk, q1..qk] {a+_p1 .. a+_pk a_qk .. a_q1},

where {...} is normal ordering with respect to the reference determinant
(occupied spin orbitals ``0 .. nocc-1``).  Internally each rank component is
a list of :class:`Network` objects: small tensor networks whose open indices
may be restricted to the occupied or virtual range.  Ranks 1 and 2 are kept
dense after every commutator; rank-3 components stay factorized and are only
materialized on request (they would not fit in memory for realistic bases).

Products are evaluated with Wick's theorem.  For every pair of input ranks
and every number of contractions (c1 lower(A)-upper(B) contractions through
virtual orbitals, c2 upper(A)-lower(B) contractions through occupied ones)
one representative contraction pattern is evaluated and weighted by its
multiplicity and its permutation sign.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations, permutations
from math import comb, factorial

import numpy as np

from .errors import DomainError, UnsupportedError
from .integrals import SpinOrbitalHamiltonian
from .reference import ReferenceFrame

MAX_RANK = 3


def _intersect(a, b):
    return (max(a[0], b[0]), min(a[1], b[1]))


def _parity(seq):
    seq = list(seq)
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inv % 2 else 1


@dataclass(frozen=True)
class Factor:
    array: np.ndarray
    labels: tuple
    offsets: tuple  # absolute orbital index of element 0 along each axis


@dataclass(frozen=True)
class Network:
    """coef * Antisym(contraction of factors), open indices ``upper + lower``.

    ``antisymmetric`` marks networks whose raw contraction is already
    antisymmetric in its open indices (so no antisymmetrizer is implied).
    """

    factors: tuple
    ranges: dict
    upper: tuple
    lower: tuple
    coef: float = 1.0
    antisymmetric: bool = True

    @property
    def rank(self):
        return len(self.upper)

    def scaled(self, c):
        return Network(self.factors, self.ranges, self.upper, self.lower,
                       self.coef * c, self.antisymmetric)

    def adjoint(self):
        return Network(self.factors, self.ranges, self.lower, self.upper,
                       self.coef, self.antisymmetric)

    def shifted(self, shift):
        f = tuple(Factor(x.array, tuple(l + shift for l in x.labels), x.offsets)
                  for x in self.factors)
        return Network(f, {l + shift: r for l, r in self.ranges.items()},
                       tuple(l + shift for l in self.upper),
                       tuple(l + shift for l in self.lower), self.coef, self.antisymmetric)

    def max_label(self):
        return max(self.ranges) if self.ranges else -1

    def block(self):
        """Contract the network; returns (open ranges, raw block times coef)."""
        labels = sorted(self.ranges)
        index = {l: i for i, l in enumerate(labels)}
        ops = []
        for f in self.factors:
            sl = tuple(slice(self.ranges[l][0] - o, self.ranges[l][1] - o)
                       for l, o in zip(f.labels, f.offsets))
            ops += [f.array[sl], [index[l] for l in f.labels]]
        out = [index[l] for l in self.upper + self.lower]
        if len(self.factors) == 1:
            raw = np.einsum(*ops, out)
        else:
            raw = np.einsum(*ops, out, optimize="greedy")
        return [self.ranges[l] for l in self.upper + self.lower], self.coef * raw

    def add_raw_into(self, acc):
        rngs, blk = self.block()
        if acc.ndim == 0:
            return acc + blk
        acc[tuple(slice(*r) for r in rngs)] += blk
        return acc


def dense_network(array, m):
    """Single-factor network spanning all orbitals."""
    r = array.ndim // 2
    labels = tuple(range(2 * r))
    return Network((Factor(array, labels, (0,) * (2 * r)),), {l: (0, m) for l in labels},
                   labels[:r], labels[r:], 1.0, True)


def block_network(array, ranges_):
    """Single-factor network for a tensor living on one orbital block."""
    r = array.ndim // 2
    labels = tuple(range(2 * r))
    return Network((Factor(array, labels, tuple(a for a, _ in ranges_)),),
                   {l: tuple(rg) for l, rg in zip(labels, ranges_)},
                   labels[:r], labels[r:], 1.0, True)


def antisymmetrize(t, normalized=True):
    """Apply the (normalized) antisymmetrizer over upper and over lower indices."""
    r = t.ndim // 2
    if r <= 1:
        return t.copy()
    if r == 2:
        a = t - t.transpose(1, 0, 2, 3)
        a = a - a.transpose(0, 1, 3, 2)
        return a / 4.0 if normalized else a
    out = np.zeros_like(t)
    for pu in permutations(range(r)):
        su = _parity(pu)
        for pl in permutations(range(r)):
            out += su * _parity(pl) * t.transpose(tuple(pu) + tuple(r + x for x in pl))
    return out / factorial(r) ** 2 if normalized else out


@lru_cache(maxsize=None)
def _wick_sign(k, l, c1, c2):
    pa_u = list(range(k))
    pa_l = [2 * k - 1 - i for i in range(k)]
    pb_u = [2 * k + j for j in range(l)]
    pb_l = [2 * k + 2 * l - 1 - j for j in range(l)]
    order = []
    for i in range(c1):
        order += [pa_l[i], pb_u[i]]
    for i in range(c2):
        order += [pa_u[i], pb_l[i]]
    order += pa_u[c2:] + pb_u[c1:]
    lowers = pa_l[c1:] + pb_l[c2:]
    order += lowers[::-1]
    return _parity(order)


def _slot_orders(labels, c, antisym):
    n = len(labels)
    if antisym or c == 0 or c == n:
        yield labels, 1.0
        return
    w = 1.0 / comb(n, c)
    for sub in combinations(range(n), c):
        order = list(sub) + [i for i in range(n) if i not in sub]
        yield tuple(labels[i] for i in order), _parity(order) * w


def wick_product(A: Network, B: Network, c1: int, c2: int, nocc: int, m: int):
    """Networks for the (c1, c2)-contracted part of the product A.B.

    Output networks represent canonical tensor contributions of rank
    ``rank(A) + rank(B) - c1 - c2``.
    """
    k, l = A.rank, B.rank
    if c1 > min(k, l) or c2 > min(k, l):
        return []
    if not (A.antisymmetric or B.antisymmetric):
        raise UnsupportedError("product of two non-antisymmetric networks")
    if B.ranges and A.ranges:
        B = B.shifted(A.max_label() + 1)
    mo = k + l - c1 - c2
    mult = comb(k, c1) * comb(l, c1) * factorial(c1) * comb(k, c2) * comb(l, c2) * factorial(c2)
    pref = A.coef * B.coef * mult * _wick_sign(k, l, c1, c2) * factorial(mo) ** 2 \
        / (factorial(k) * factorial(l)) ** 2
    occ, vir = (0, nocc), (nocc, m)
    out = []
    for au, wau in _slot_orders(A.upper, c2, A.antisymmetric):
        for al, wal in _slot_orders(A.lower, c1, A.antisymmetric):
            for bu, wbu in _slot_orders(B.upper, c1, B.antisymmetric):
                for bl, wbl in _slot_orders(B.lower, c2, B.antisymmetric):
                    net = _join(A, B, au, al, bu, bl, c1, c2, occ, vir)
                    if net is None:
                        continue
                    w = pref * wau * wal * wbu * wbl
                    out.append(Network(net[0], net[1], net[2], net[3], w, mo <= 1))
    return out


def _join(A, B, au, al, bu, bl, c1, c2, occ, vir):
    ranges = dict(A.ranges)
    ranges.update(B.ranges)
    rename = {}
    for i in range(c1):
        r = _intersect(_intersect(ranges[al[i]], ranges[bu[i]]), vir)
        if r[0] >= r[1]:
            return None
        ranges[al[i]] = r
        rename[bu[i]] = al[i]
    for i in range(c2):
        r = _intersect(_intersect(ranges[au[i]], ranges[bl[i]]), occ)
        if r[0] >= r[1]:
            return None
        ranges[au[i]] = r
        rename[bl[i]] = au[i]
    for old in rename:
        del ranges[old]
    bf = tuple(Factor(f.array, tuple(rename.get(x, x) for x in f.labels), f.offsets)
               for f in B.factors)
    upper = au[c2:] + bu[c1:]
    lower = al[c1:] + bl[c2:]
    for x in upper + lower:
        if ranges[x][0] >= ranges[x][1]:
            return None
    return A.factors + bf, ranges, upper, lower


def occupied_trace(net: Network, nocc: int):
    """Networks for sum_i X[.., i, .., i] of a rank-3 network (last slots traced).

    The trace of the antisymmetrized tensor is expanded over which raw slot
    carries the traced index; the returned rank-2 networks still need
    antisymmetrization.
    """
    k = net.rank
    pairs = [(k - 1, k - 1, 1.0)] if net.antisymmetric else \
        [(a, b, (-1) ** (a + b) / k ** 2) for a in range(k) for b in range(k)]
    out = []
    for a, b, w in pairs:
        lu, ll = net.upper[a], net.lower[b]
        r = _intersect(_intersect(net.ranges[lu], net.ranges[ll]), (0, nocc))
        if r[0] >= r[1]:
            continue
        ranges = dict(net.ranges)
        ranges[lu] = r
        del ranges[ll]
        factors = tuple(Factor(f.array, tuple(lu if x == ll else x for x in f.labels), f.offsets)
                        for f in net.factors)
        upper = net.upper[:a] + net.upper[a + 1:]
        lower = net.lower[:b] + net.lower[b + 1:]
        out.append(Network(factors, ranges, upper, lower, net.coef * w, False))
    return out


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalOrderedOperator:
    """scalar + rank-1..3 components, each a tuple of networks."""

    m: int
    nocc: int
    scalar: float = 0.0
    parts: dict = field(default_factory=dict)
    grade: int | None = None
    hermitian: bool = False
    anti_hermitian: bool = False

    @classmethod
    def from_dense(cls, m, nocc, scalar=0.0, c1=None, c2=None, c3=None, **kw):
        parts = {}
        for r, t in ((1, c1), (2, c2), (3, c3)):
            if t is not None:
                t = np.asarray(t, dtype=float)
                if t.shape != (m,) * (2 * r):
                    raise DomainError("rank-%d tensor has shape %s, expected %s"
                                      % (r, t.shape, (m,) * (2 * r)))
                parts[r] = (dense_network(t, m),)
        return cls(m, nocc, float(scalar), parts, **kw)

    @classmethod
    def zero(cls, m, nocc, **kw):
        return cls(m, nocc, 0.0, {}, **kw)

    @property
    def rank(self):
        return max([r for r, nets in self.parts.items() if nets], default=0)

    def dense(self, r):
        """Materialize the canonical rank-r tensor."""
        if r == 0:
            return self.scalar
        acc = np.zeros((self.m,) * (2 * r))
        exact = True
        for net in self.parts.get(r, ()):
            net.add_raw_into(acc)
            exact &= net.antisymmetric
        return acc if exact else antisymmetrize(acc)

    @cached_property
    def c1(self):
        return self.dense(1)

    @cached_property
    def c2(self):
        return self.dense(2)

    @property
    def c3(self):
        if self.m > 16:
            raise UnsupportedError("dense rank-3 tensor over %d spin orbitals" % self.m)
        return self.dense(3)

    def truncated(self, max_rank):
        return NormalOrderedOperator(self.m, self.nocc, self.scalar,
                                     {r: n for r, n in self.parts.items() if r <= max_rank},
                                     self.grade, self.hermitian, self.anti_hermitian)

    def scaled(self, c):
        return NormalOrderedOperator(self.m, self.nocc, self.scalar * c,
                                     {r: tuple(n.scaled(c) for n in nets)
                                      for r, nets in self.parts.items()},
                                     self.grade, self.hermitian, self.anti_hermitian)

    def adjoint(self):
        return NormalOrderedOperator(self.m, self.nocc, self.scalar,
                                     {r: tuple(n.adjoint() for n in nets)
                                      for r, nets in self.parts.items()},
                                     self.grade, self.hermitian, self.anti_hermitian)

    def with_grade(self, grade):
        return NormalOrderedOperator(self.m, self.nocc, self.scalar, self.parts, grade,
                                     self.hermitian, self.anti_hermitian)

    def hermiticity_error(self, max_rank=2):
        err = 0.0
        for r in range(1, max_rank + 1):
            t = self.dense(r)
            perm = tuple(range(r, 2 * r)) + tuple(range(r))
            err = max(err, float(np.max(np.abs(t - t.transpose(perm)), initial=0.0)))
        return err

    def dump(self, path, tol=1e-14, max_rank=2):
        """Text dump: one ``rank  indices...  coefficient`` record per line."""
        lines = ["0 %.16e" % self.scalar]
        for r in range(1, max_rank + 1):
            t = self.dense(r)
            for idx in zip(*np.nonzero(np.abs(t) > tol)):
                lines.append("%d %s %.16e" % (r, " ".join(map(str, idx)), t[idx]))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _check_compatible(ops):
    m, nocc = ops[0].m, ops[0].nocc
    for op in ops[1:]:
        if op.m != m or op.nocc != nocc:
            raise DomainError("operators act on different orbital spaces")
    return m, nocc


def scale_add(terms) -> NormalOrderedOperator:
    """Linear combination ``sum c_i * op_i`` (ranks 1-2 summed densely)."""
    terms = list(terms)
    if not terms:
        raise DomainError("scale_add needs at least one operator")
    m, nocc = _check_compatible([op for _, op in terms])
    scalar = sum(c * op.scalar for c, op in terms)
    parts = {}
    for r in (1, 2):
        if any(op.parts.get(r) for _, op in terms):
            acc = sum(c * op.dense(r) for c, op in terms if op.parts.get(r))
            parts[r] = (dense_network(acc, m),)
    r3 = tuple(n.scaled(c) for c, op in terms for n in op.parts.get(3, ()) if c != 0.0)
    if r3:
        parts[3] = r3
    grades = {op.grade for _, op in terms}
    return NormalOrderedOperator(m, nocc, scalar, parts,
                                 grades.pop() if len(grades) == 1 else None,
                                 all(op.hermitian for _, op in terms),
                                 all(op.anti_hermitian for _, op in terms))


def commutator(A: NormalOrderedOperator, B: NormalOrderedOperator, max_rank=2):
    """Normal-ordered [A, B] keeping components of rank <= max_rank.

    Only connected terms appear: fully uncontracted products cancel.
    """
    if not 1 <= max_rank <= MAX_RANK:
        raise UnsupportedError("max_rank must be between 1 and %d" % MAX_RANK)
    if A.rank > 3 or B.rank > 2:
        raise UnsupportedError("commutator supports rank(A) <= 3 and rank(B) <= 2")
    m, nocc = _check_compatible([A, B])
    scalar = 0.0
    acc = {r: None for r in (1, 2)}
    lazy = []
    for ka, nets_a in A.parts.items():
        for kb, nets_b in B.parts.items():
            for c1 in range(min(ka, kb) + 1):
                for c2 in range(min(ka, kb) + 1):
                    mo = ka + kb - c1 - c2
                    if c1 + c2 == 0 or mo > max_rank:
                        continue
                    nets = []
                    for na in nets_a:
                        for nb in nets_b:
                            nets += wick_product(na, nb, c1, c2, nocc, m)
                            nets += [n.scaled(-1.0) for n in wick_product(nb, na, c1, c2, nocc, m)]
                    if mo == 0:
                        scalar += sum(float(n.block()[1]) for n in nets)
                    elif mo == 3:
                        lazy += nets
                    else:
                        if acc[mo] is None:
                            acc[mo] = np.zeros((m,) * (2 * mo))
                        for n in nets:
                            n.add_raw_into(acc[mo])
    parts = {}
    for r in (1, 2):
        if acc[r] is not None:
            parts[r] = (dense_network(antisymmetrize(acc[r]), m),)
    if lazy:
        parts[3] = tuple(lazy)
    herm = (A.hermitian and B.anti_hermitian) or (A.anti_hermitian and B.hermitian)
    anti = (A.hermitian and B.hermitian) or (A.anti_hermitian and B.anti_hermitian)
    grade = None if A.grade is None or B.grade is None else A.grade + B.grade
    return NormalOrderedOperator(m, nocc, scalar, parts, grade, herm, anti)


# ---------------------------------------------------------------------------
# Hamiltonian in particle-hole form, physical-vacuum conversion
# ---------------------------------------------------------------------------

def normal_order(H: SpinOrbitalHamiltonian, ref: ReferenceFrame) -> NormalOrderedOperator:
    """H = E_ref + F_N + V_N."""
    return NormalOrderedOperator.from_dense(H.m, ref.nocc, ref.e_ref, ref.fock, H.v, hermitian=True)


def hamiltonian_parts(H: SpinOrbitalHamiltonian, ref: ReferenceFrame):
    """(F_N, V_N) as separate normal-ordered operators."""
    f = NormalOrderedOperator.from_dense(H.m, ref.nocc, 0.0, ref.fock, hermitian=True)
    v = NormalOrderedOperator.from_dense(H.m, ref.nocc, 0.0, None, H.v, hermitian=True)
    return f, v


def ph_to_physical_vacuum(A: NormalOrderedOperator, ref: ReferenceFrame | None = None):
    """Return (scalar, one_body, two_body) of A in physical-vacuum form."""
    if A.parts.get(3):
        raise UnsupportedError("physical-vacuum conversion supports rank <= 2")
    nocc = A.nocc if ref is None else ref.nocc
    o = slice(0, nocc)
    c1 = A.dense(1) if A.parts.get(1) else np.zeros((A.m, A.m))
    c2 = A.dense(2) if A.parts.get(2) else np.zeros((A.m,) * 4)
    one = c1 - np.einsum("piqi->pq", c2[:, o, :, o])
    scalar = A.scalar - np.trace(c1[o, o]) + 0.5 * np.einsum("ijij->", c2[o, o, o, o])
    return float(scalar), one, c2


# ---------------------------------------------------------------------------
# perturbative grading
# ---------------------------------------------------------------------------

def graded_hamiltonian(H: SpinOrbitalHamiltonian, ref: ReferenceFrame):
    """H_N split by MBPT order: {0: diagonal Fock, 1: off-diagonal Fock + V_N}."""
    f = ref.fock
    fd = np.diag(np.diag(f))
    g0 = NormalOrderedOperator.from_dense(H.m, ref.nocc, 0.0, fd, hermitian=True, grade=0)
    g1 = NormalOrderedOperator.from_dense(H.m, ref.nocc, 0.0, f - fd, H.v, hermitian=True, grade=1)
    return {0: g0, 1: g1}


def graded_fock(H: SpinOrbitalHamiltonian, ref: ReferenceFrame):
    f = ref.fock
    fd = np.diag(np.diag(f))
    return {0: NormalOrderedOperator.from_dense(H.m, ref.nocc, 0.0, fd, hermitian=True, grade=0),
            1: NormalOrderedOperator.from_dense(H.m, ref.nocc, 0.0, f - fd, hermitian=True, grade=1)}


def graded_commutator(A: dict, B: dict, max_rank=2, max_order=None):
    """Commutator of graded operator streams; grades add per contraction term."""
    out = {}
    for ga, a in A.items():
        for gb, b in B.items():
            if ga is None or gb is None:
                raise DomainError("ungraded operator in graded commutator")
            g = ga + gb
            if max_order is not None and g > max_order:
                continue
            c = commutator(a, b, max_rank).with_grade(g)
            out[g] = c if g not in out else scale_add([(1.0, out[g]), (1.0, c)]).with_grade(g)
    return out


def perturbative_filter(graded: dict, max_order=None):
    """Sum of the graded components with order <= max_order (None keeps all)."""
    if any(g is None for g in graded):
        raise DomainError("ungraded term in perturbative filter")
    keep = [(1.0, op) for g, op in sorted(graded.items()) if max_order is None or g <= max_order]
    if not keep:
        ops = list(graded.values())
        if not ops:
            raise DomainError("empty term stream")
        return NormalOrderedOperator.zero(ops[0].m, ops[0].nocc)
    return scale_add(keep)
