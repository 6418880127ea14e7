"""Generate FCIDUMP fixtures with PySCF (not a package dependency).

    python scripts/make_fixtures.py            # small committed fixtures
    python scripts/make_fixtures.py --extended # large Be / Li2 / H2O cc-pVTZ files

All files are RHF canonical orbitals, all electrons correlated.
"""
import argparse
from pathlib import Path

import numpy as np
from pyscf import ao2mo, gto, scf, symm
from pyscf.tools import fcidump

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"


def rhf_fcidump(path, atom, basis, *, symmetry=True, unit="Angstrom"):
    mol = gto.M(atom=atom, basis=basis, unit=unit, symmetry=symmetry,
                cart=False, verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-13
    mf.conv_tol_grad = 1e-9
    mf.kernel()
    if not mf.converged:
        raise RuntimeError("SCF did not converge for %s" % path)
    c = mf.mo_coeff
    orbsym = None
    if symmetry:
        orbsym = symm.label_orb_symm(mol, mol.irrep_id, mol.symm_orb, c)
    h1 = c.T @ mf.get_hcore() @ c
    eri = ao2mo.full(mol, c, compact=True)
    fcidump.from_integrals(str(path), h1, eri, c.shape[1], mol.nelectron,
                           nuc=mol.energy_nuc(), ms=0, orbsym=orbsym, tol=1e-14,
                           float_format=" %.16e")
    print("%-28s norb=%3d nelec=%2d E(RHF)=%.10f" % (Path(path).name, c.shape[1],
                                                     mol.nelectron, mf.e_tot))
    return mf


def h2o_geometry(scale_oh1=1.0):
    re_oh, angle = 0.96183, np.deg2rad(103.9215)
    r1 = re_oh * scale_oh1
    return [["O", (0.0, 0.0, 0.0)],
            ["H", (r1, 0.0, 0.0)],
            ["H", (re_oh * np.cos(angle), re_oh * np.sin(angle), 0.0)]]


LI2_DISTANCES = [2.13840, 2.27205, 2.40570, 2.53935, 2.67300, 2.80665, 2.94030,
                 3.07395, 3.20760, 3.34125, 4.00950, 4.67775, 5.34600, 6.68250]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--extended", action="store_true")
    ap.add_argument("--out", type=Path, default=DATA)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    if not args.extended:
        rhf_fcidump(args.out / "be_ccpvdz.fcidump", "Be 0 0 0", "cc-pvdz")
        rhf_fcidump(args.out / "lih_sto3g.fcidump", "Li 0 0 0; H 0 0 1.6", "sto-3g")
        rhf_fcidump(args.out / "h2_631g.fcidump", "H 0 0 0; H 0 0 0.74", "6-31g")
        rhf_fcidump(args.out / "h2o_sto3g.fcidump", h2o_geometry(), "sto-3g")
        return

    ext = args.out / "extended"
    ext.mkdir(exist_ok=True)
    rhf_fcidump(ext / "be_ccpvtz.fcidump", "Be 0 0 0", "cc-pvtz")
    for scale in (1.0, 1.5, 2.0):
        rhf_fcidump(ext / ("h2o_ccpvtz_%.1fre.fcidump" % scale), h2o_geometry(scale), "cc-pvtz")
    for r in LI2_DISTANCES:
        rhf_fcidump(ext / ("li2_ccpvtz_%.5f.fcidump" % r), "Li 0 0 0; Li 0 0 %.5f" % r, "cc-pvtz")


if __name__ == "__main__":
    main()
