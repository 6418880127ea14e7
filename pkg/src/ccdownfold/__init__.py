"""Coupled-cluster downfolding: active-space effective Hamiltonians from CCSD amplitudes."""
from .active import ActiveSpace, SigmaExt, build_sigma_ext, select_active, split_external
from .bench import RunConfig, RunReport, export_effective_hamiltonian, run_pipeline, sweep_geometries
from .casci import CiResult, DavidsonOptions, solve_ci
from .ccsd import ClusterAmplitudes, CcsdOptions, ccsd_energy, ccsd_solve
from .errors import (BasisError, ConvergenceError, DegeneracyError, DomainError, DownfoldError,
                     ExportError, ParseError, UnsupportedError)
from .integrals import IntegralSet, SpinOrbitalHamiltonian, parse_fcidump, rotate_basis, to_spin_orbitals
from .noq import NormalOrderedOperator, commutator, normal_order, ph_to_physical_vacuum
from .reference import ReferenceFrame, build_reference, mbpt2
from .variants import VARIANTS, BracketStreams, DownfoldedHamiltonian, build_variant, export_fcidump

__version__ = "0.1.0"
