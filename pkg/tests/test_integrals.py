import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, strategies as st

from ccdownfold.errors import BasisError, ParseError
from ccdownfold.integrals import (IntegralSet, has_eightfold_symmetry, parse_fcidump, rotate_basis,
                                  to_spin_orbitals, write_fcidump)
from ccdownfold.reference import build_reference
from conftest import DATA
from systems import random_spatial

HEADER = " &FCI NORB=2,NELEC=2,MS2=0,\n  ORBSYM=1,1,\n  ISYM=1,\n &END\n"


def write(tmp_path, body, header=HEADER):
    p = tmp_path / "x.fcidump"
    p.write_text(header + body)
    return p


def test_parse_expands_eightfold(tmp_path):
    p = write(tmp_path, " 0.5 1 2 1 1\n 0.25 2 1 2 2\n -1.0 1 1 0 0\n 0.7 0 0 0 0\n")
    ints = parse_fcidump(p)
    assert ints.n_orbitals == 2 and ints.n_electrons == 2
    assert ints.core_energy == 0.7
    for idx in [(0, 1, 0, 0), (1, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0)]:
        assert ints.eri_spatial[idx] == 0.5
    assert ints.eri_spatial[1, 0, 1, 1] == ints.eri_spatial[1, 1, 0, 1] == 0.25
    assert ints.h_spatial[0, 0] == -1.0


def test_fortran_exponent_and_unknown_keys(tmp_path):
    head = " &FCI NORB=1,NELEC=2,MS2=0,UHF=.FALSE.,\n  ORBSYM=1,\n  ISYM=1,\n  FOO=3\n &END\n"
    ints = parse_fcidump(write(tmp_path, " 1.0D-01 1 1 1 1\n", head))
    npt.assert_allclose(ints.eri_spatial[0, 0, 0, 0], 0.1)


@pytest.mark.parametrize("body", [
    " 0.5 1 2 1\n",                   # four-token record
    " abc 1 1 1 1\n",
    " 0.5 3 1 1 1\n",                 # index beyond NORB
    " 0.5 1 2 1 1\n 0.6 2 1 1 1\n",   # conflicting symmetry duplicate
    " 0.5 0 1 0 1\n",
])
def test_malformed_body(tmp_path, body):
    with pytest.raises(ParseError):
        parse_fcidump(write(tmp_path, body))


def test_missing_header_and_file(tmp_path):
    with pytest.raises(ParseError):
        parse_fcidump(write(tmp_path, " 0.5 1 1 1 1\n", header=""))
    with pytest.raises(ParseError):
        parse_fcidump(tmp_path / "nope.fcidump")


@pytest.mark.parametrize("permsym", [8, 1])
def test_write_parse_round_trip(tmp_path, permsym):
    rng = np.random.default_rng(3)
    h, eri = random_spatial(4, rng)
    ints = IntegralSet(4, 2, 0, 1.25, h, eri)
    write_fcidump(tmp_path / "r.fcidump", ints, permsym=permsym)
    back = parse_fcidump(tmp_path / "r.fcidump")
    npt.assert_allclose(back.h_spatial, h, atol=1e-15)
    npt.assert_allclose(back.eri_spatial, eri, atol=1e-15)
    assert back.core_energy == 1.25


def test_permsym1_keeps_asymmetric_eri(tmp_path):
    rng = np.random.default_rng(4)
    h, eri = random_spatial(3, rng)
    eri = eri + 0.01 * rng.standard_normal(eri.shape) * (eri != 0)
    eri = 0.5 * (eri + eri.transpose(2, 3, 0, 1))
    assert not has_eightfold_symmetry(eri)
    write_fcidump(tmp_path / "p.fcidump", IntegralSet(3, 2, 0, 0.0, h, eri), permsym=1)
    npt.assert_allclose(parse_fcidump(tmp_path / "p.fcidump").eri_spatial, eri, atol=1e-15)


def test_spin_orbital_tensor_symmetries(small_fixture):
    H = to_spin_orbitals(parse_fcidump(small_fixture))
    v = H.v
    npt.assert_allclose(v, -v.transpose(1, 0, 2, 3), atol=1e-14)
    npt.assert_allclose(v, -v.transpose(0, 1, 3, 2), atol=1e-14)
    npt.assert_allclose(v, v.transpose(2, 3, 0, 1), atol=1e-14)
    npt.assert_allclose(H.h[0::2, 1::2], 0.0)
    npt.assert_allclose(v[0::2, 0::2, 1::2, 1::2], 0.0)


@given(st.integers(0, 2 ** 31 - 1))
def test_rotation_of_occupied_block_keeps_hf_energy(seed):
    rng = np.random.default_rng(seed)
    ints = parse_fcidump(DATA / "lih_sto3g.fcidump")
    H = to_spin_orbitals(ints)
    C = np.eye(6)
    q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
    C[:2, :2] = q
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    C[2:, 2:] = q
    Hr = rotate_basis(H, C)
    npt.assert_allclose(build_reference(Hr, 4).e_ref, build_reference(H, 4).e_ref, atol=1e-11)
    npt.assert_allclose(np.linalg.eigvalsh(Hr.h), np.linalg.eigvalsh(H.h), atol=1e-11)


@pytest.mark.parametrize("C", [np.eye(3), 2 * np.eye(4)])
def test_rotate_basis_rejects_bad_matrices(C):
    rng = np.random.default_rng(0)
    h, eri = random_spatial(4, rng)
    H = to_spin_orbitals(IntegralSet(4, 2, 0, 0.0, h, eri))
    with pytest.raises(BasisError):
        rotate_basis(H, C)
