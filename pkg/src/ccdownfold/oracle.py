"""Brute-force Fock-space reference implementations.

Everything here works on explicit matrices over the full Fock space of at
most ``MAX_ORBITALS`` spin orbitals (Jordan-Wigner ordering, basis state
index = occupation bitmask).  It shares no algebra with :mod:`noq` and is
used to check it.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, UnsupportedError

MAX_ORBITALS = 12


class FockSpace:
    def __init__(self, m, nocc=0):
        if m > MAX_ORBITALS:
            raise UnsupportedError("Fock-space oracle limited to %d spin orbitals" % MAX_ORBITALS)
        self.m, self.nocc = m, nocc
        self.dim = 1 << m
        self.masks = np.arange(self.dim, dtype=np.int64)
        self.ref = (1 << nocc) - 1
        self.nparticles = np.bitwise_count(self.masks).astype(np.int64)

    # -- string application ------------------------------------------------
    def apply(self, ops):
        """Apply ``ops`` (list of (orbital, dagger), rightmost acts first) to every basis state.

        Returns (columns, rows, signs) of the nonzero matrix elements.
        """
        masks = self.masks.copy()
        sign = np.ones(self.dim)
        alive = np.ones(self.dim, dtype=bool)
        for p, dag in reversed(ops):
            bit = 1 << p
            occ = (masks & bit) != 0
            alive &= ~occ if dag else occ
            sign *= 1 - 2 * (np.bitwise_count(masks & (bit - 1)).astype(np.int64) & 1)
            masks = masks ^ bit
        return self.masks[alive], masks[alive], sign[alive]

    def add_string(self, mat, ops, coef):
        cols, rows, sign = self.apply(ops)
        mat[rows, cols] += coef * sign

    @staticmethod
    def apply_one(ops, mask):
        sign = 1
        for p, dag in reversed(ops):
            bit = 1 << p
            if bool(mask & bit) == dag:
                return 0, None
            if bin(mask & (bit - 1)).count("1") & 1:
                sign = -sign
            mask ^= bit
        return sign, mask

    # -- quasi-particle view -------------------------------------------------
    def qp_create(self, p):
        return (p, p >= self.nocc)

    def qp_annihilate(self, p):
        return (p, p < self.nocc)

    def qp_string(self, A, B):
        """b+_a1 .. b+_ak b_bl .. b_b1 with A, B ascending."""
        return [self.qp_create(a) for a in A] + [self.qp_annihilate(b) for b in reversed(B)]

    def qp_state(self, S):
        return self.apply_one([self.qp_create(s) for s in S], self.ref)

    def normal_ordered_string(self, P, Q):
        """(sign, ops) of {a+_P a_Q(reversed)} w.r.t. the reference."""
        ops = [(p, True) for p in P] + [(q, False) for q in reversed(Q)]
        is_cre = [(dag and p >= self.nocc) or (not dag and p < self.nocc) for p, dag in ops]
        order = [i for i, c in enumerate(is_cre) if c] + [i for i, c in enumerate(is_cre) if not c]
        inv = sum(1 for i in range(len(order)) for j in range(i + 1, len(order)) if order[i] > order[j])
        return (-1) ** inv, [ops[i] for i in order]


# ---------------------------------------------------------------------------
# operator matrices
# ---------------------------------------------------------------------------

def materialize_physical(fs: FockSpace, scalar, h, v=None):
    """scalar + sum h a+a + 1/4 sum v a+a+aa as a Fock-space matrix."""
    mat = scalar * np.eye(fs.dim)
    m = fs.m
    for p in range(m):
        for q in range(m):
            if h[p, q] != 0.0:
                fs.add_string(mat, [(p, True), (q, False)], h[p, q])
    if v is not None:
        for p, q in combinations(range(m), 2):
            for r, s in combinations(range(m), 2):
                if v[p, q, r, s] != 0.0:
                    fs.add_string(mat, [(p, True), (q, True), (s, False), (r, False)], v[p, q, r, s])
    return mat


def materialize_tensors(fs: FockSpace, scalar=0.0, tensors=(), tol=0.0):
    """scalar + sum_k 1/(k!)^2 X_k {a+..a..} for antisymmetric tensors X_k (k = 1, 2, 3)."""
    mat = scalar * np.eye(fs.dim)
    for x in tensors:
        if x is None:
            continue
        k = x.ndim // 2
        for P in combinations(range(fs.m), k):
            for Q in combinations(range(fs.m), k):
                c = x[P + Q]
                if abs(c) <= tol:
                    continue
                sign, ops = fs.normal_ordered_string(P, Q)
                fs.add_string(mat, ops, sign * c)
    return mat


def materialize(fs: FockSpace, op, max_rank=3):
    """Matrix of a :class:`noq.NormalOrderedOperator`."""
    tensors = [op.dense(r) for r in range(1, max_rank + 1) if op.parts.get(r)]
    return materialize_tensors(fs, op.scalar, tensors)


# ---------------------------------------------------------------------------
# particle-hole rank projection
# ---------------------------------------------------------------------------

def ph_coefficients(fs: FockSpace, X, max_qp=4, tol=1e-14):
    """Coefficients x[A, B] of X = sum x[A, B] b+_A b_B with |A| + |B| <= max_qp.

    Obtained by Moebius inversion over spectator quasi-particles:
    <A|X|B> = sum_{R in A&B} <A| b+_{A-R} b_{B-R} |B> x[A-R, B-R].
    """
    m = fs.m
    subsets = [tuple(c) for n in range(max_qp + 1) for c in combinations(range(m), n)]
    states = {S: fs.qp_state(S) for S in subsets}
    coef = {}
    pairs = [(A, B) for A in subsets for B in subsets if len(A) + len(B) <= max_qp]
    pairs.sort(key=lambda ab: len(ab[0]) + len(ab[1]))
    for A, B in pairs:
        sa, ma = states[A]
        sb, mb = states[B]
        if bin(ma).count("1") != bin(mb).count("1"):
            continue
        val = sa * sb * X[ma, mb]
        common = sorted(set(A) & set(B))
        for n in range(1, len(common) + 1):
            for R in combinations(common, n):
                A2 = tuple(a for a in A if a not in R)
                B2 = tuple(b for b in B if b not in R)
                x = coef.get((A2, B2))
                if not x:
                    continue
                s, out = fs.apply_one(fs.qp_string(A2, B2), mb)
                if out != ma:
                    raise DomainError("inconsistent spectator bookkeeping")
                val -= x * s * sb * sa
        if abs(val) > tol:
            coef[(A, B)] = val
    return coef


def ph_truncate(fs: FockSpace, X, max_rank=2):
    """Keep the normal-ordered components of X with particle-hole rank <= max_rank."""
    out = np.zeros_like(X)
    for (A, B), x in ph_coefficients(fs, X, 2 * max_rank).items():
        fs.add_string(out, fs.qp_string(A, B), x)
    return out


# ---------------------------------------------------------------------------
# unitary transforms and bracket series
# ---------------------------------------------------------------------------

def exact_transform(fs: FockSpace, H, sigma):
    """exp(-sigma) H exp(sigma), evaluated block by particle-number sector."""
    out = np.zeros_like(H)
    for n in range(fs.m + 1):
        idx = np.nonzero(fs.nparticles == n)[0]
        u = expm(sigma[np.ix_(idx, idx)])
        out[np.ix_(idx, idx)] = u.T @ H[np.ix_(idx, idx)] @ u
    return out


def comm(a, b):
    return a @ b - b @ a


def commutator_series(H, sigma, order):
    """[..[H, sigma], .. sigma] nested ``order`` times."""
    out = H
    for _ in range(order):
        out = comm(out, sigma)
    return out


def graded_comm(A: dict, B: dict, max_order=None):
    out = {}
    for ga, a in A.items():
        for gb, b in B.items():
            g = ga + gb
            if max_order is not None and g > max_order:
                continue
            out[g] = out.get(g, 0) + comm(a, b)
    return out


def upto(graded: dict, order=None):
    return sum(x for g, x in graded.items() if order is None or g <= order)


def variant_matrix(name, H, f_graded, h_graded, s_graded):
    """Matrix form of the effective-Hamiltonian variants before rank projection.

    ``H`` is the full Hamiltonian matrix; ``h_graded`` the normal-ordered
    H_N split by perturbative order, ``f_graded`` the Fock part alone and
    ``s_graded`` the anti-Hermitian external cluster operator by order.
    """
    c1 = graded_comm(h_graded, s_graded)
    f1 = graded_comm(f_graded, s_graded)
    f2 = graded_comm(f1, s_graded)
    if name == "A1":
        return H
    if name == "A2":
        return H + upto(c1, 2) + 0.5 * upto(f2, 2)
    if name == "A3":
        return H + upto(c1)
    if name == "A4":
        return H + upto(c1) + 0.5 * upto(f2)
    c2 = graded_comm(c1, s_graded)
    f3 = graded_comm(f2, s_graded)
    if name == "A5":
        return H + upto(c1, 3) + 0.5 * upto(c2, 3) + upto(f3, 3) / 6.0
    if name == "A6":
        return H + upto(c1) + 0.5 * upto(c2)
    if name == "A7":
        return H + upto(c1) + 0.5 * upto(c2) + upto(f3) / 6.0
    raise DomainError("unknown variant %r" % name)


def sectorwise(fs: FockSpace, fn, *args):
    """Evaluate ``fn`` on each particle-number block of number-conserving matrices.

    ``args`` are matrices or dicts of matrices; the blocks of ``fn``'s result
    are reassembled into a full Fock-space matrix.
    """
    out = np.zeros((fs.dim, fs.dim))
    for n in range(fs.m + 1):
        idx = np.nonzero(fs.nparticles == n)[0]
        ix = np.ix_(idx, idx)
        sub = [{k: x[ix] for k, x in a.items()} if isinstance(a, dict) else a[ix] for a in args]
        out[ix] = fn(*sub)
    return out


def restrict_to_sector(fs: FockSpace, X, n_particles, orbitals=None, frozen_occupied=()):
    """Block of X on states with ``n_particles`` electrons in ``orbitals``.

    Orbitals outside ``orbitals`` are pinned: those in ``frozen_occupied``
    filled, the rest empty.  Returns (matrix, masks).
    """
    orbitals = range(fs.m) if orbitals is None else orbitals
    act = sum(1 << p for p in orbitals)
    fixed = sum(1 << p for p in frozen_occupied)
    sel = ((fs.masks & ~act) == fixed) & (np.bitwise_count(fs.masks & act) == n_particles)
    idx = np.nonzero(sel)[0]
    return X[np.ix_(idx, idx)], fs.masks[idx]
