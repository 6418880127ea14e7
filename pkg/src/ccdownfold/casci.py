"""Determinant CI in the Sz sector of an active space.

Determinants are products of an alpha string and a beta string over the
active spatial orbitals, |I> = a+_{alpha string} a+_{beta string} |vac>
(all alpha creators to the left).  With that convention every
spin-conserving Hamiltonian splits into same-spin string Hamiltonians and an
alpha-beta coupling sum_{prqs} W[p,r,q,s] E^a_pr E^b_qs whose string signs
factorize.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, DomainError
from .integrals import SpinOrbitalHamiltonian

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000


@dataclass(frozen=True, order=True)
class Determinant:
    alpha_bits: int
    beta_bits: int

    def occupations(self, n):
        return ([p for p in range(n) if self.alpha_bits >> p & 1],
                [p for p in range(n) if self.beta_bits >> p & 1])

    def bitstring(self, n):
        a = "".join("1" if self.alpha_bits >> p & 1 else "0" for p in range(n))
        b = "".join("1" if self.beta_bits >> p & 1 else "0" for p in range(n))
        return a + " " + b


@dataclass
class DavidsonOptions:
    tol: float = 1e-9
    max_subspace: int = 30
    max_iter: int = 200
    nroots: int = 1


@dataclass
class CiResult:
    energy: float
    eigenvector: np.ndarray
    n_determinants: int
    iterations: int
    residual: float
    energies: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def dump(self, path, basis, n, tol=1e-8):
        """Write ``alpha_bits beta_bits coefficient`` for significant determinants."""
        with open(path, "w") as fh:
            for det, c in zip(basis, self.eigenvector):
                if abs(c) > tol:
                    fh.write("%s % .12e\n" % (det.bitstring(n), c))


def strings(n, k):
    """Occupation bitmasks of k electrons in n orbitals, lexicographic."""
    return [sum(1 << p for p in occ) for occ in combinations(range(n), k)]


def enumerate_basis(n_orbitals, n_alpha, n_beta):
    """Alpha-major determinant list; the lowest-orbital reference comes first."""
    if not (0 <= n_alpha <= n_orbitals and 0 <= n_beta <= n_orbitals):
        raise DomainError("cannot place (%d, %d) electrons in %d orbitals"
                          % (n_alpha, n_beta, n_orbitals))
    sa, sb = strings(n_orbitals, n_alpha), strings(n_orbitals, n_beta)
    return [Determinant(a, b) for a in sa for b in sb]


def _popcount_below(mask, p):
    return bin(mask & ((1 << p) - 1)).count("1")


def _excite(mask, p, r):
    """a+_p a_r |mask> as (sign, new mask) or (0, None)."""
    if not mask >> r & 1:
        return 0, None
    sign = -1 if _popcount_below(mask, r) & 1 else 1
    mask ^= 1 << r
    if mask >> p & 1:
        return 0, None
    if _popcount_below(mask, p) & 1:
        sign = -sign
    return sign, mask | 1 << p


# ---------------------------------------------------------------------------
# Hamiltonian in spin blocks
# ---------------------------------------------------------------------------

@dataclass
class SpinBlocks:
    n: int
    scalar: float
    h: tuple          # (h_alpha, h_beta)
    v_same: tuple     # (v_aaaa, v_bbbb) antisymmetrized, spatial indices
    w: np.ndarray     # w[p, r, q, s] = <p_a q_b || r_a s_b>

    @classmethod
    def from_spin_orbitals(cls, H: SpinOrbitalHamiltonian, tol=1e-10):
        if H.m % 2:
            raise DomainError("odd number of spin orbitals")
        a, b = slice(0, None, 2), slice(1, None, 2)
        h, v = H.h, H.v
        leak = max(np.max(np.abs(h[a, b]), initial=0.0),
                   np.max(np.abs(v[a, a, a, b]), initial=0.0),
                   np.max(np.abs(v[a, b, b, b]), initial=0.0),
                   np.max(np.abs(v[a, a, b, b]), initial=0.0))
        if leak > tol:
            raise DomainError("Hamiltonian does not conserve Sz (|leak| = %.2e)" % leak)
        return cls(H.m // 2, float(H.scalar), (h[a, a].copy(), h[b, b].copy()),
                   (v[a, a, a, a].copy(), v[b, b, b, b].copy()),
                   v[a, b, a, b].transpose(0, 2, 1, 3).copy())


def _single_lists(strs, n):
    index = {s: i for i, s in enumerate(strs)}
    rows, cols, pr, sgn = [], [], [], []
    for j, s in enumerate(strs):
        for r in range(n):
            if not s >> r & 1:
                continue
            for p in range(n):
                sign, t = _excite(s, p, r)
                if sign:
                    rows.append(index[t])
                    cols.append(j)
                    pr.append(p * n + r)
                    sgn.append(sign)
    return np.array(rows, int), np.array(cols, int), np.array(pr, int), np.array(sgn, float)


def _string_hamiltonian(strs, n, h, v):
    """Dense same-spin string Hamiltonian (no scalar) by Slater-Condon rules."""
    ns = len(strs)
    index = {s: i for i, s in enumerate(strs)}
    out = np.zeros((ns, ns))
    for j, s in enumerate(strs):
        occ = [p for p in range(n) if s >> p & 1]
        vir = [p for p in range(n) if not s >> p & 1]
        out[j, j] = sum(h[i, i] for i in occ) + 0.5 * sum(v[i, k, i, k] for i in occ for k in occ)
        for r in occ:
            for p in vir:
                sign, t = _excite(s, p, r)
                val = h[p, r] + sum(v[p, k, r, k] for k in occ)
                out[index[t], j] += sign * val
        for r1, r2 in combinations(occ, 2):
            for p1, p2 in combinations(vir, 2):
                s1, t = _excite(s, p2, r2)
                s2, t = _excite(t, p1, r1)
                out[index[t], j] += s1 * s2 * v[p1, p2, r1, r2]
    return out


class CiHamiltonian:
    """Matrix-free Sz-sector Hamiltonian for a spin-orbital operator."""

    def __init__(self, H: SpinOrbitalHamiltonian, n_alpha, n_beta):
        self.blocks = sb = SpinBlocks.from_spin_orbitals(H)
        n = self.n = sb.n
        if not (0 <= n_alpha <= n and 0 <= n_beta <= n):
            raise DomainError("cannot place (%d, %d) electrons in %d orbitals" % (n_alpha, n_beta, n))
        self.n_alpha, self.n_beta = n_alpha, n_beta
        self.sa, self.sb = strings(n, n_alpha), strings(n, n_beta)
        self.na, self.nb = len(self.sa), len(self.sb)
        self.ha = _string_hamiltonian(self.sa, n, sb.h[0], sb.v_same[0])
        self.hb = _string_hamiltonian(self.sb, n, sb.h[1], sb.v_same[1])
        ea = _single_lists(self.sa, n)
        eb = _single_lists(self.sb, n)
        self.ea = [sp.csr_matrix((np.zeros(0), (np.zeros(0, int), np.zeros(0, int))), shape=(self.na, self.na))
                   for _ in range(n * n)]
        for k in range(n * n):
            sel = ea[2] == k
            if sel.any():
                self.ea[k] = sp.csr_matrix((ea[3][sel], (ea[0][sel], ea[1][sel])), shape=(self.na, self.na))
        # beta side folded with the coupling: M_pr = sum_qs w[p,r,q,s] E^b_qs
        wb = sb.w.reshape(n * n, n * n)[:, eb[2]] * eb[3][None, :]
        self.mb = [sp.csr_matrix((wb[k], (eb[0], eb[1])), shape=(self.nb, self.nb)) if self.ea[k].nnz else None
                   for k in range(n * n)]
        occa = np.array([[s >> p & 1 for p in range(n)] for s in self.sa], float).reshape(self.na, n)
        occb = np.array([[s >> p & 1 for p in range(n)] for s in self.sb], float).reshape(self.nb, n)
        wd = np.einsum("ppqq->pq", sb.w)
        self.diag = (sb.scalar + np.diag(self.ha)[:, None] + np.diag(self.hb)[None, :]
                     + occa @ wd @ occb.T).ravel()

    @property
    def dim(self):
        return self.na * self.nb

    def basis(self):
        return [Determinant(a, b) for a in self.sa for b in self.sb]

    def matvec(self, x):
        c = x.reshape(self.na, self.nb)
        out = self.blocks.scalar * c + self.ha @ c + c @ self.hb.T
        for ea, mb in zip(self.ea, self.mb):
            if mb is not None and mb.nnz:
                out += ea @ (mb @ c.T).T
        return out.ravel()

    def dense(self):
        eye = np.eye(self.dim)
        return np.column_stack([self.matvec(eye[:, k]) for k in range(self.dim)])


# ---------------------------------------------------------------------------
# Slater-Condon matrix element between arbitrary determinants
# ---------------------------------------------------------------------------

def _block_mask(det: Determinant, n):
    return det.alpha_bits | det.beta_bits << n


def matrix_element(d1: Determinant, d2: Determinant, H: SpinOrbitalHamiltonian):
    """<d1|H|d2> for a rank-<=2 physical-vacuum Hamiltonian."""
    n = H.m // 2
    if (bin(d1.alpha_bits).count("1"), bin(d1.beta_bits).count("1")) != \
            (bin(d2.alpha_bits).count("1"), bin(d2.beta_bits).count("1")):
        raise DomainError("determinants belong to different sectors")
    # modes in block order: alpha orbitals 0..n-1, beta orbitals n..2n-1
    perm = np.concatenate([np.arange(0, 2 * n, 2), np.arange(1, 2 * n, 2)])
    h = H.h[np.ix_(perm, perm)]
    m1, m2 = _block_mask(d1, n), _block_mask(d2, n)
    diff = m1 ^ m2
    ndiff = bin(diff).count("1") // 2
    if ndiff > 2:
        return 0.0
    occ = [p for p in range(2 * n) if m2 >> p & 1]

    def v(p, q, r, s):
        return H.v[perm[p], perm[q], perm[r], perm[s]]

    if ndiff == 0:
        return float(H.scalar + sum(h[i, i] for i in occ)
                     + 0.5 * sum(v(i, j, i, j) for i in occ for j in occ))
    created = [p for p in range(2 * n) if diff >> p & 1 and m1 >> p & 1]
    removed = [p for p in range(2 * n) if diff >> p & 1 and m2 >> p & 1]
    if ndiff == 1:
        (p,), (r,) = created, removed
        sign, _ = _excite(m2, p, r)
        return float(sign * (h[p, r] + sum(v(p, k, r, k) for k in occ)))
    (p1, p2), (r1, r2) = created, removed
    s1, t = _excite(m2, p2, r2)
    s2, _ = _excite(t, p1, r1)
    return float(s1 * s2 * v(p1, p2, r1, r2))


# ---------------------------------------------------------------------------
# eigensolvers
# ---------------------------------------------------------------------------

def dense_lowest(ham: CiHamiltonian, nroots=1):
    w, u = np.linalg.eigh(ham.dense())
    return w[:nroots], u[:, :nroots]


def davidson_lowest(ham: CiHamiltonian, opts: DavidsonOptions | None = None, guess=None) -> CiResult:
    """Block Davidson for the lowest ``opts.nroots`` eigenpairs (diagonal preconditioner)."""
    opts = opts or DavidsonOptions()
    dim = ham.dim
    if dim == 0:
        raise DomainError("empty determinant basis")
    k = min(opts.nroots, dim)
    if dim == 1:
        e = float(ham.matvec(np.ones(1))[0])
        return CiResult(e, np.ones(1), 1, 0, 0.0, np.array([e]))
    diag = ham.diag
    if guess is None:
        order = np.argsort(diag, kind="stable")
        nguess = min(dim, max(k, min(4, dim)))
        V = np.zeros((dim, nguess))
        V[order[:nguess], np.arange(nguess)] = 1.0
    else:
        V = np.linalg.qr(np.atleast_2d(np.asarray(guess, float).T).T)[0]
    AV = np.column_stack([ham.matvec(V[:, j]) for j in range(V.shape[1])])
    max_sub = max(opts.max_subspace, 2 * k + 2)
    rnorm = np.inf
    for it in range(1, opts.max_iter + 1):
        Hs = V.T @ AV
        w, s = np.linalg.eigh(0.5 * (Hs + Hs.T))
        w, s = w[:k], s[:, :k]
        X = V @ s
        R = AV @ s - X * w
        rn = np.linalg.norm(R, axis=0)
        rnorm = float(np.max(rn))
        log.debug("davidson it %3d  e %.12f  |r| %.3e", it, w[0], rnorm)
        if rnorm <= opts.tol:
            return CiResult(float(w[0]), X[:, 0] / np.linalg.norm(X[:, 0]), dim, it, float(rn[0]), w.copy())
        new = []
        for j in np.nonzero(rn > opts.tol)[0]:
            d = w[j] - diag
            d[np.abs(d) < 1e-8] = 1e-8
            new.append(R[:, j] / d)
        if V.shape[1] + len(new) > max_sub:
            # collapse onto the current Ritz vectors
            V, AV = X, AV @ s
            V, r = np.linalg.qr(V)
            AV = np.linalg.solve(r.T, AV.T).T
        added = 0
        for t in new:
            t = t / np.linalg.norm(t)
            for _ in range(2):
                t = t - V @ (V.T @ t)
            nt = np.linalg.norm(t)
            if nt < 1e-8:  # linearly dependent on the subspace
                continue
            t /= nt
            V = np.column_stack([V, t])
            AV = np.column_stack([AV, ham.matvec(t)])
            added += 1
        if added == 0:
            # subspace stagnation: restart from Ritz vectors plus random directions
            rng = np.random.default_rng(it)
            t = rng.standard_normal(dim)
            t -= V @ (V.T @ t)
            t /= np.linalg.norm(t)
            V = np.column_stack([V, t])
            AV = np.column_stack([AV, ham.matvec(t)])
    raise ConvergenceError("Davidson did not converge in %d iterations" % opts.max_iter,
                           residual=rnorm, iterations=opts.max_iter)


def solve_ci(H: SpinOrbitalHamiltonian, n_alpha, n_beta, opts: DavidsonOptions | None = None,
             dense=None) -> CiResult:
    """Lowest root(s); uses dense diagonalization for small bases unless ``dense`` is False."""
    opts = opts or DavidsonOptions()
    ham = CiHamiltonian(H, n_alpha, n_beta)
    if dense or (dense is None and ham.dim <= DENSE_LIMIT and opts.nroots > 1):
        w, u = dense_lowest(ham, opts.nroots)
        return CiResult(float(w[0]), u[:, 0], ham.dim, 1, 0.0, w)
    return davidson_lowest(ham, opts)


def n_determinants(n_orbitals, n_alpha, n_beta):
    return comb(n_orbitals, n_alpha) * comb(n_orbitals, n_beta)
