import numpy as np
import numpy.testing as npt
import pytest

from ccdownfold import oracle
from ccdownfold.active import ActiveSpace, build_sigma_ext, select_active, split_external
from ccdownfold.ccsd import ClusterAmplitudes
from ccdownfold.errors import DegeneracyError, DomainError
from ccdownfold.integrals import spin_orbital_from_arrays
from ccdownfold.reference import build_reference
from systems import random_system


@pytest.fixture
def system():
    return random_system(5, 4, np.random.default_rng(0))


@pytest.mark.parametrize("n", [2, 3, 5])
def test_rhf_energy_selection(system, n):
    H, ref = system
    act = select_active("rhf-energy", n, ref)
    assert act.active_spatial == tuple(range(n))
    assert act.n_active_electrons == 4
    assert act.active_spin == tuple(range(2 * n))


def test_natural_occupation_selection(system):
    _, ref = system
    occ = np.array([1.99, 1.98, 0.001, 0.02, 0.01])
    assert select_active("natural-occupation", 3, ref, occ).active_spatial == (0, 1, 3)


@pytest.mark.parametrize("n", [1, 6])
def test_bad_sizes(system, n):
    with pytest.raises(DomainError):
        select_active("rhf-energy", n, system[1])


def test_bad_ordering(system):
    with pytest.raises(DomainError):
        select_active("alphabetical", 3, system[1])
    with pytest.raises(DomainError):
        select_active("natural-occupation", 3, system[1])


def test_degenerate_boundary():
    h = np.diag([-1.0, 0.5, 0.5, 1.0])
    H = spin_orbital_from_arrays(0.0, h, np.zeros((4,) * 4), 2)
    ref = build_reference(H, 2)
    with pytest.raises(DegeneracyError):
        select_active("rhf-energy", 2, ref)
    assert select_active("rhf-energy", 3, ref).active_spatial == (0, 1, 2)
    assert ActiveSpace.from_list([0, 2], ref).active_spatial == (0, 2)


@pytest.mark.parametrize("orbitals", [[1, 2], [0, 7], []])
def test_explicit_list_errors(system, orbitals):
    with pytest.raises(DomainError):
        ActiveSpace.from_list(orbitals, system[1])


def test_split_removes_only_all_active(system):
    H, ref = system
    rng = np.random.default_rng(1)
    T = ClusterAmplitudes(rng.standard_normal((6, 4)), rng.standard_normal((6, 6, 4, 4)))
    act = select_active("rhf-energy", 3, ref)
    ext = split_external(T, act)
    # virtual spin orbitals 4,5 (spatial 2) are active; 6.. are not
    npt.assert_array_equal(ext.t1[:2], 0.0)
    npt.assert_array_equal(ext.t1[2:], T.t1[2:])
    npt.assert_array_equal(ext.t2[:2, :2], 0.0)
    npt.assert_array_equal(ext.t2[2:], T.t2[2:])
    sigma = build_sigma_ext(ext)
    assert sigma.all_active_norm(act) == 0.0
    assert build_sigma_ext(T).all_active_norm(act) > 0.0


def test_sigma_is_anti_hermitian_excitation_minus_deexcitation(system):
    H, ref = system
    rng = np.random.default_rng(2)
    T = ClusterAmplitudes(rng.standard_normal((6, 4)), rng.standard_normal((6, 6, 4, 4)))
    T = ClusterAmplitudes(T.t1, T.t2 - T.t2.transpose(1, 0, 2, 3))
    T = ClusterAmplitudes(T.t1, T.t2 - T.t2.transpose(0, 1, 3, 2))
    act = select_active("rhf-energy", 3, ref)
    sigma = build_sigma_ext(split_external(T, act))
    op = sigma.operator()
    npt.assert_allclose(op.dense(1), -op.dense(1).T, atol=1e-14)
    npt.assert_allclose(op.dense(2), -op.dense(2).transpose(2, 3, 0, 1), atol=1e-14)
    npt.assert_allclose(op.dense(1), sigma.s1, atol=1e-14)
    npt.assert_allclose(op.dense(2), sigma.s2, atol=1e-14)
    fs = oracle.FockSpace(ref.m, ref.nocc)
    S = oracle.materialize(fs, op)
    npt.assert_allclose(S, -S.T, atol=1e-12)


def test_full_space_sigma_vanishes(system):
    H, ref = system
    rng = np.random.default_rng(3)
    T = ClusterAmplitudes(rng.standard_normal((6, 4)), rng.standard_normal((6, 6, 4, 4)))
    assert build_sigma_ext(split_external(T, select_active("rhf-energy", 5, ref))).is_zero()
