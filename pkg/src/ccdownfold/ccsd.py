"""Spin-orbital CCSD with DIIS acceleration.

Amplitudes are stored as ``t1[a, i]`` and ``t2[a, b, i, j]``; internally the
working equations use the ``[i, a]`` / ``[i, j, a, b]`` layout.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, ParseError
from .integrals import SpinOrbitalHamiltonian
from .reference import ReferenceFrame, first_order_doubles

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterAmplitudes:
    t1: np.ndarray  # [a, i]
    t2: np.ndarray  # [a, b, i, j]

    @property
    def nvir(self):
        return self.t1.shape[0]

    @property
    def nocc(self):
        return self.t1.shape[1]

    @classmethod
    def zeros(cls, nocc, nvir):
        return cls(np.zeros((nvir, nocc)), np.zeros((nvir, nvir, nocc, nocc)))


@dataclass
class CcsdOptions:
    max_iter: int = 200
    e_tol: float = 1e-9
    r_tol: float = 1e-7
    diis_depth: int = 8
    diis_start: int = 1


@dataclass
class CcsdRecord:
    iterations: int = 0
    residual: float = float("nan")
    history: list = field(default_factory=list)


class _Diis:
    def __init__(self, depth, max_cond=1e12):
        self.depth = depth
        self.max_cond = max_cond
        self.vecs, self.errs = [], []

    def extrapolate(self, vec, err):
        self.vecs.append(vec.copy())
        self.errs.append(err.copy())
        if len(self.vecs) > self.depth:
            del self.vecs[0], self.errs[0]
        n = len(self.vecs)
        if n < 2:
            return vec
        b = -np.ones((n + 1, n + 1))
        b[n, n] = 0.0
        e = np.array(self.errs)
        b[:n, :n] = e @ e.T
        if np.linalg.cond(b) > self.max_cond:
            # linear dependence: restart from the newest vector
            self.vecs, self.errs = [self.vecs[-1]], [self.errs[-1]]
            return vec
        rhs = np.zeros(n + 1)
        rhs[n] = -1.0
        c = np.linalg.solve(b, rhs)[:n]
        return np.einsum("i,ij->j", c, np.array(self.vecs))


class _Blocks:
    def __init__(self, H, ref):
        o, v = ref.o, ref.v
        f = ref.fock
        self.foo, self.fov, self.fvv = f[o, o], f[o, v], f[v, v]
        g = H.v
        self.oooo = g[o, o, o, o]
        self.ooov = g[o, o, o, v]
        self.oovv = g[o, o, v, v]
        self.ovov = g[o, v, o, v]
        self.ovvo = g[o, v, v, o]
        self.ovvv = g[o, v, v, v]
        self.vvvo = g[v, v, v, o]
        self.ovoo = g[o, v, o, o]
        self.oovo = g[o, o, v, o]
        self.vovv = g[v, o, v, v]
        self.vvvv = g[v, v, v, v]
        self.d1 = np.diag(self.foo)[:, None] - np.diag(self.fvv)[None, :]
        self.d2 = (self.d1[:, None, :, None] + self.d1[None, :, None, :])


def _energy(b, t1, t2):
    return (np.einsum("ia,ia->", b.fov, t1)
            + 0.25 * np.einsum("ijab,ijab->", b.oovv, t2)
            + 0.5 * np.einsum("ijab,ia,jb->", b.oovv, t1, t1))


def _residuals(b, t1, t2):
    """Return the CCSD residuals R1[i,a], R2[i,j,a,b] (zero at convergence)."""
    tau = t2 + np.einsum("ia,jb->ijab", t1, t1) - np.einsum("ib,ja->ijab", t1, t1)
    taut = t2 + 0.5 * (np.einsum("ia,jb->ijab", t1, t1) - np.einsum("ib,ja->ijab", t1, t1))

    fae = b.fvv - np.diag(np.diag(b.fvv))
    fae = (fae - 0.5 * np.einsum("me,ma->ae", b.fov, t1)
           + np.einsum("mf,mafe->ae", t1, b.ovvv)
           - 0.5 * np.einsum("mnaf,mnef->ae", taut, b.oovv))
    fmi = b.foo - np.diag(np.diag(b.foo))
    fmi = (fmi + 0.5 * np.einsum("ie,me->mi", t1, b.fov)
           + np.einsum("ne,mnie->mi", t1, b.ooov)
           + 0.5 * np.einsum("inef,mnef->mi", taut, b.oovv))
    fme = b.fov + np.einsum("nf,mnef->me", t1, b.oovv)

    x = np.einsum("je,mnie->mnij", t1, b.ooov)
    wmnij = b.oooo + x - x.transpose(0, 1, 3, 2) + 0.25 * np.einsum("ijef,mnef->mnij", tau, b.oovv)
    x = np.einsum("mb,amef->abef", t1, b.vovv)
    wabef = b.vvvv - x + x.transpose(1, 0, 2, 3) + 0.25 * np.einsum("mnab,mnef->abef", tau, b.oovv)
    wmbej = (b.ovvo + np.einsum("jf,mbef->mbej", t1, b.ovvv)
             - np.einsum("nb,mnej->mbej", t1, b.oovo)
             - 0.5 * np.einsum("jnfb,mnef->mbej", t2, b.oovv)
             - np.einsum("jf,nb,mnef->mbej", t1, t1, b.oovv, optimize=True))

    r1 = (b.fov.copy() - b.d1 * t1
          + np.einsum("ie,ae->ia", t1, fae)
          - np.einsum("ma,mi->ia", t1, fmi)
          + np.einsum("imae,me->ia", t2, fme)
          - np.einsum("nf,naif->ia", t1, b.ovov)
          - 0.5 * np.einsum("imef,maef->ia", t2, b.ovvv)
          - 0.5 * np.einsum("mnae,nmei->ia", t2, b.oovo))

    r2 = b.oovv.copy() - b.d2 * t2
    x = (np.einsum("ijae,be->ijab", t2, fae)
         - 0.5 * np.einsum("ijae,mb,me->ijab", t2, t1, fme, optimize=True))
    r2 += x - x.transpose(0, 1, 3, 2)
    x = (np.einsum("imab,mj->ijab", t2, fmi)
         + 0.5 * np.einsum("imab,je,me->ijab", t2, t1, fme, optimize=True))
    r2 -= x - x.transpose(1, 0, 2, 3)
    r2 += 0.5 * np.einsum("mnab,mnij->ijab", tau, wmnij)
    r2 += 0.5 * np.einsum("ijef,abef->ijab", tau, wabef)
    x = (np.einsum("imae,mbej->ijab", t2, wmbej)
         - np.einsum("ie,ma,mbej->ijab", t1, t1, b.ovvo, optimize=True))
    r2 += x - x.transpose(0, 1, 3, 2) - x.transpose(1, 0, 2, 3) + x.transpose(1, 0, 3, 2)
    x = np.einsum("ie,abej->ijab", t1, b.vvvo)
    r2 += x - x.transpose(1, 0, 2, 3)
    x = np.einsum("ma,mbij->ijab", t1, b.ovoo)
    r2 -= x - x.transpose(0, 1, 3, 2)
    return r1, r2


def ccsd_energy(H: SpinOrbitalHamiltonian, ref: ReferenceFrame, amps: ClusterAmplitudes) -> float:
    b = _Blocks(H, ref)
    return float(_energy(b, amps.t1.T, amps.t2.transpose(2, 3, 0, 1)))


def ccsd_residual_norm(H, ref, amps: ClusterAmplitudes) -> float:
    b = _Blocks(H, ref)
    r1, r2 = _residuals(b, amps.t1.T, amps.t2.transpose(2, 3, 0, 1))
    return float(np.sqrt(np.sum(r1 ** 2) + np.sum(r2 ** 2)))


def mbpt2_guess(H: SpinOrbitalHamiltonian, ref: ReferenceFrame) -> ClusterAmplitudes:
    t2 = first_order_doubles(H, ref)
    return ClusterAmplitudes(np.zeros((len(ref.virtual), ref.nocc)), t2)


def ccsd_solve(H: SpinOrbitalHamiltonian, ref: ReferenceFrame, opts: CcsdOptions | None = None,
               guess: ClusterAmplitudes | None = None, record: CcsdRecord | None = None):
    """Iterate the CCSD equations; returns ``(ClusterAmplitudes, e_corr)``."""
    opts = opts or CcsdOptions()
    record = record if record is not None else CcsdRecord()
    b = _Blocks(H, ref)
    nocc, nvir = b.fov.shape
    if nocc == 0 or nvir == 0:
        return ClusterAmplitudes.zeros(nocc, nvir), 0.0
    if guess is None:
        guess = mbpt2_guess(H, ref)
    t1 = guess.t1.T.copy()
    t2 = guess.t2.transpose(2, 3, 0, 1).copy()
    n1 = t1.size
    diis = _Diis(opts.diis_depth)
    e_old = _energy(b, t1, t2)
    for it in range(1, opts.max_iter + 1):
        r1, r2 = _residuals(b, t1, t2)
        rnorm = float(np.sqrt(np.sum(r1 ** 2) + np.sum(r2 ** 2)))
        e = _energy(b, t1, t2)
        record.iterations, record.residual = it, rnorm
        record.history.append((float(e), rnorm))
        log.debug("ccsd it %3d  e_corr %.12f  |r| %.3e", it, e, rnorm)
        if rnorm <= opts.r_tol and abs(e - e_old) <= opts.e_tol:
            return ClusterAmplitudes(t1.T.copy(), t2.transpose(2, 3, 0, 1).copy()), float(e)
        e_old = e
        t1n = t1 + r1 / b.d1
        t2n = t2 + r2 / b.d2
        if opts.diis_depth > 0 and it >= opts.diis_start:
            vec = np.concatenate([t1n.ravel(), t2n.ravel()])
            err = np.concatenate([(t1n - t1).ravel(), (t2n - t2).ravel()])
            vec = diis.extrapolate(vec, err)
            t1n = vec[:n1].reshape(t1.shape)
            t2n = vec[n1:].reshape(t2.shape)
        t1, t2 = t1n, t2n
    raise ConvergenceError("CCSD did not converge in %d iterations" % opts.max_iter,
                           residual=record.residual, iterations=opts.max_iter)


# ---------------------------------------------------------------------------
# checkpoint file: npz with explicit shape header
# ---------------------------------------------------------------------------

def save_amplitudes(path, amps: ClusterAmplitudes):
    np.savez(Path(path), shape=np.array([amps.nocc, amps.nvir]), t1=amps.t1, t2=amps.t2)


def load_amplitudes(path) -> ClusterAmplitudes:
    with np.load(Path(path)) as f:
        nocc, nvir = (int(x) for x in f["shape"])
        t1, t2 = f["t1"], f["t2"]
    if t1.shape != (nvir, nocc) or t2.shape != (nvir, nvir, nocc, nocc):
        raise ParseError("amplitude checkpoint shapes disagree with header")
    return ClusterAmplitudes(t1, t2)
