import numpy as np
import numpy.testing as npt
import pytest

from ccdownfold.active import ActiveSpace, build_sigma_ext, select_active, split_external
from ccdownfold.casci import solve_ci
from ccdownfold.ccsd import ccsd_solve
from ccdownfold.errors import DomainError, ExportError
from ccdownfold.integrals import parse_fcidump, spin_orbital_from_arrays, to_spin_orbitals
from ccdownfold.reference import build_reference
from ccdownfold.variants import (VARIANTS, BracketStreams, DownfoldedHamiltonian, build_variant,
                                 export_fcidump, read_effective_fcidump, spatial_integrals,
                                 variant_term_report)
from conftest import DATA
from systems import random_system


@pytest.fixture(scope="module")
def lih():
    ints = parse_fcidump(DATA / "lih_sto3g.fcidump")
    H = to_spin_orbitals(ints)
    ref = build_reference(H, 4)
    amps, _ = ccsd_solve(H, ref)
    act = select_active("rhf-energy", 3, ref)
    sigma = build_sigma_ext(split_external(amps, act))
    return H, ref, act, sigma, BracketStreams(H, ref, sigma)


@pytest.mark.parametrize("variant", VARIANTS)
def test_hermitian_and_antisymmetric(lih, variant):
    H, ref, act, sigma, streams = lih
    heff = build_variant(variant, H, ref, sigma, act, streams)
    assert heff.hermiticity_error() < 1e-10
    assert heff.antisymmetry_error() < 1e-10
    assert heff.m == 6


def test_a1_is_active_slice(lih):
    H, ref, act, sigma, streams = lih
    heff = build_variant("A1", H, ref, sigma, act, streams)
    idx = np.array(act.active_spin)
    npt.assert_allclose(heff.one_body, H.h[np.ix_(idx, idx)], atol=1e-12)
    npt.assert_allclose(heff.two_body, H.v[np.ix_(idx, idx, idx, idx)], atol=1e-12)
    npt.assert_allclose(heff.scalar, H.scalar, atol=1e-12)


@pytest.mark.parametrize("variant", VARIANTS)
def test_zero_sigma_gives_bare_hamiltonian(lih, variant):
    H, ref, act, sigma, _ = lih
    zero = build_sigma_ext(split_external(ccsd_solve(H, ref)[0], select_active("rhf-energy", 6, ref)))
    assert zero.is_zero()
    full = select_active("rhf-energy", 6, ref)
    heff = build_variant(variant, H, ref, zero, full)
    npt.assert_allclose(heff.one_body, H.h, atol=1e-12)
    npt.assert_allclose(heff.two_body, H.v, atol=1e-12)


def test_downfolding_lowers_error_for_lih(lih):
    H, ref, act, sigma, streams = lih
    e_fci = solve_ci(H, 2, 2).energy
    errs = {v: abs(solve_ci(build_variant(v, H, ref, sigma, act, streams).as_hamiltonian(), 2, 2).energy - e_fci)
            for v in ("A1", "A4", "A7")}
    assert errs["A7"] < errs["A1"] and errs["A4"] < errs["A1"]


def test_errors(lih):
    H, ref, act, sigma, streams = lih
    with pytest.raises(DomainError):
        build_variant("A8", H, ref, sigma, act, streams)
    with pytest.raises(DomainError):
        build_variant("A3", H, ref, build_sigma_ext(ccsd_solve(H, ref)[0]), act)


def test_term_report(lih):
    H, ref, act, sigma, streams = lih
    rows = variant_term_report("A7", H, ref, sigma, act, streams)
    assert [r["prefactor"] for r in rows] == [1.0, 0.5, pytest.approx(1 / 6)]
    assert variant_term_report("A1", H, ref, sigma, act, streams) == []


@pytest.mark.parametrize("variant", ["A1", "A4", "A7"])
def test_export_round_trip(tmp_path, lih, variant):
    H, ref, act, sigma, streams = lih
    heff = build_variant(variant, H, ref, sigma, act, streams)
    path = export_fcidump(heff, tmp_path / ("%s.fcidump" % variant))
    back = read_effective_fcidump(path)
    npt.assert_allclose(back.h, heff.one_body, atol=1e-12)
    npt.assert_allclose(back.v, heff.two_body, atol=1e-12)
    npt.assert_allclose(solve_ci(back, 2, 2).energy, solve_ci(heff.as_hamiltonian(), 2, 2).energy, atol=1e-9)


def test_a1_export_matches_input_fcidump(tmp_path, lih):
    H, ref, act, sigma, streams = lih
    path = export_fcidump(build_variant("A1", H, ref, sigma, act, streams), tmp_path / "a1.fcidump")
    assert "PERMSYM" not in path.read_text()
    ints, out = parse_fcidump(DATA / "lih_sto3g.fcidump"), parse_fcidump(path)
    a = list(act.active_spatial)
    npt.assert_allclose(out.h_spatial, ints.h_spatial[np.ix_(a, a)], atol=1e-12)
    npt.assert_allclose(out.eri_spatial, ints.eri_spatial[np.ix_(a, a, a, a)], atol=1e-12)


def spin_broken_heff():
    rng = np.random.default_rng(0)
    H, ref = random_system(3, 2, rng)
    h = H.h.copy()
    h[0::2, 0::2] += 0.05 * np.eye(3)  # alpha-only shift keeps Sz but breaks spin symmetry
    act = ActiveSpace((0, 1, 2), 2)
    return DownfoldedHamiltonian("A1", H.scalar, h, H.v.copy(), act)


def test_spin_broken_export_needs_flag(tmp_path):
    heff = spin_broken_heff()
    assert spatial_integrals(heff) is None
    with pytest.raises(ExportError):
        export_fcidump(heff, tmp_path / "x.fcidump")
    path = export_fcidump(heff, tmp_path / "x.fcidump", spin_orbital=True)
    assert "SPINORB=1" in path.read_text()
    back = read_effective_fcidump(path)
    npt.assert_allclose(back.h, heff.one_body, atol=1e-12)
    npt.assert_allclose(back.v, heff.two_body, atol=1e-12)
    npt.assert_allclose(solve_ci(back, 1, 1).energy, solve_ci(heff.as_hamiltonian(), 1, 1).energy, atol=1e-9)


def test_fourfold_eri_exported_with_permsym1(tmp_path):
    # commutator terms keep (pq|rs) = (rs|pq) = (qp|sr) but not (pq|rs) = (qp|rs)
    rng = np.random.default_rng(1)
    h = np.diag([-1.0, 0.3, 0.8])
    g = rng.standard_normal((3,) * 4)
    g = g + g.transpose(2, 3, 0, 1)
    g = g + g.transpose(1, 0, 3, 2)
    H = spin_orbital_from_arrays(0.5, h, 0.1 * g, 2)
    heff = DownfoldedHamiltonian("A3", H.scalar, H.h, H.v, ActiveSpace((0, 1, 2), 2))
    assert spatial_integrals(heff) is not None
    text = export_fcidump(heff, tmp_path / "p.fcidump").read_text()
    assert "PERMSYM=1" in text
    back = read_effective_fcidump(tmp_path / "p.fcidump")
    npt.assert_allclose(back.v, heff.two_body, atol=1e-12)
    npt.assert_allclose(solve_ci(back, 1, 1).energy, solve_ci(H, 1, 1).energy, atol=1e-9)
