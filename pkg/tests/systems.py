"""Random model systems shared by the test modules."""
import numpy as np

from ccdownfold.active import SigmaExt, build_sigma_ext, select_active, split_external
from ccdownfold.ccsd import ccsd_solve
from ccdownfold.integrals import spin_orbital_from_arrays
from ccdownfold.noq import normal_order
from ccdownfold import oracle
from ccdownfold.reference import build_reference


def random_spatial(n, rng, coupling=0.05):
    """Spin-free (h, eri) with 8-fold symmetry and a clear occupied/virtual gap."""
    h = np.diag(np.linspace(-1.0, 1.0, n) + 0.1 * rng.uniform(-1, 1, n))
    x = coupling * rng.standard_normal((n, n))
    h = h + 0.5 * (x + x.T)
    g = rng.standard_normal((n, n, n, n))
    for perm in [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)]:
        g = g + g.transpose(perm)
    eri = coupling * g / 8 + 0.3 * np.einsum("pq,rs->pqrs", np.eye(n), np.eye(n))
    return h, eri


def random_system(n_spatial, n_electrons, rng, coupling=0.05):
    h, eri = random_spatial(n_spatial, rng, coupling)
    H = spin_orbital_from_arrays(rng.uniform(-1, 1), h, eri, n_electrons)
    return H, build_reference(H, n_electrons)


def downfold_setup(H, ref, n_active):
    amps, e_corr = ccsd_solve(H, ref)
    act = select_active("rhf-energy", n_active, ref)
    return amps, act, build_sigma_ext(split_external(amps, act))


def matrix_pieces(fs, H, ref, sigma: SigmaExt):
    """Fock-space matrices of H, graded F_N, graded H_N and graded sigma."""
    MH = oracle.materialize_physical(fs, H.scalar, H.h, H.v)
    Hn = normal_order(H, ref)
    f = Hn.c1
    fd = np.diag(np.diag(f))
    Fd = oracle.materialize_tensors(fs, 0.0, [fd])
    Fo = oracle.materialize_tensors(fs, 0.0, [f - fd])
    V = oracle.materialize_tensors(fs, 0.0, [Hn.c2])
    S = {1: oracle.materialize_tensors(fs, 0.0, [None, sigma.s2]),
         2: oracle.materialize_tensors(fs, 0.0, [sigma.s1])}
    return MH, {0: Fd, 1: Fo}, {0: Fd, 1: Fo + V}, S
