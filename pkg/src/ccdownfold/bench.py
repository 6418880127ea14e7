"""End-to-end pipeline: FCIDUMP -> reference -> CCSD -> sigma_ext -> variants -> CAS-CI."""
from __future__ import annotations

import configparser
import contextlib
import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .active import ActiveSpace, build_sigma_ext, select_active, split_external
from .casci import DavidsonOptions, n_determinants, solve_ci
from .ccsd import CcsdOptions, CcsdRecord, ccsd_solve
from .errors import ConvergenceError, DomainError, DownfoldError
from .integrals import parse_fcidump, rotate_basis, to_spin_orbitals
from .reference import build_reference, mbpt2
from .variants import VARIANTS, BracketStreams, build_variant, check_variant, export_fcidump

log = logging.getLogger(__name__)

FCI_DETERMINANT_LIMIT = 50_000
ORBITAL_MODES = ("rhf", "mp2no")


@dataclass
class RunConfig:
    fcidump_path: str
    orbital_mode: str = "rhf"
    active: list = field(default_factory=lambda: [5])  # counts or explicit orbital lists
    variants: tuple = VARIANTS
    n_electrons: int | None = None
    reference_energy: float | None = None
    full_ci: bool | None = None  # None: compute when tractable
    ccsd: CcsdOptions = field(default_factory=CcsdOptions)
    davidson: DavidsonOptions = field(default_factory=DavidsonOptions)
    export_dir: str | None = None
    keep_going: bool = False
    label: str = ""

    def validate(self):
        if self.orbital_mode not in ORBITAL_MODES:
            raise DomainError("orbital mode must be one of %s" % ", ".join(ORBITAL_MODES))
        if not self.variants:
            raise DomainError("no variants requested")
        for v in self.variants:
            check_variant(v)
        if not self.active:
            raise DomainError("no active space requested")
        return self


@dataclass
class RunReport:
    label: str
    n_orbitals: int
    n_electrons: int
    e_hf: float | None = None
    e_ccsd: float | None = None
    e_fci: float | None = None
    reference_energy: float | None = None
    rows: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    ccsd_record: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def canonical(self):
        d = asdict(self)
        d.pop("timings")
        for r in d["rows"]:
            r.pop("seconds", None)
        return d

    def to_json(self, canonical=False):
        return json.dumps(self.canonical() if canonical else asdict(self), indent=2, sort_keys=True)

    def to_csv(self):
        return rows_to_csv(self.rows)

    def to_text(self):
        lines = ["# %s  HF %s  CCSD %s  FCI %s" % (self.label or "run", _f5(self.e_hf),
                                                   _f5(self.e_ccsd), _f5(self.e_fci))]
        sizes = sorted({r["active_size"] for r in self.rows})
        lines.append("%-8s" % "Method" + "".join("%14s" % ("%d orbitals" % s) for s in sizes))
        for v in dict.fromkeys(r["variant"] for r in self.rows):
            vals = {r["active_size"]: r["energy"] for r in self.rows if r["variant"] == v}
            lines.append("%-8s" % v + "".join("%14s" % _f5(vals.get(s)) for s in sizes))
        for e in self.errors:
            lines.append("! %s" % e)
        return "\n".join(lines) + "\n"


def _f5(x):
    return "-" if x is None else "%.5f" % x


CSV_FIELDS = ("label", "variant", "active_size", "active_orbitals", "energy", "error",
              "correlation_percent", "accuracy_percent", "n_determinants", "ci_iterations",
              "ci_residual", "status")


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (" ".join(map(str, r[k])) if k == "active_orbitals" and r.get(k) else r.get(k, ""))
                    for k in CSV_FIELDS})
    return buf.getvalue()


def correlation_percent(e, e_hf, e_ref):
    """Signed share of the reference correlation energy, (E - E_HF)/(E_ref - E_HF)."""
    if e_ref is None or e_hf is None or e_ref == e_hf:
        return None
    return 100.0 * (e - e_hf) / (e_ref - e_hf)


def accuracy_percent(e, e_hf, e_ref):
    """100 (1 - |E - E_ref| / |E_ref - E_HF|); equals the signed share below the reference."""
    if e_ref is None or e_hf is None or e_ref == e_hf:
        return None
    return 100.0 * (1.0 - abs(e - e_ref) / abs(e_ref - e_hf))


@contextlib.contextmanager
def stage(name):
    try:
        yield
    except DownfoldError as exc:
        if not getattr(exc, "stage", None):
            exc.stage = name
            if exc.args:
                exc.args = ("%s: %s" % (name, exc.args[0]),) + exc.args[1:]
        raise


def _active_space(choice, ref, occupations, mode):
    if isinstance(choice, (int, np.integer)):
        ordering = "natural-occupation" if mode == "mp2no" else "rhf-energy"
        return select_active(ordering, int(choice), ref, occupations)
    return ActiveSpace.from_list(choice, ref)


def run_pipeline(cfg: RunConfig) -> RunReport:
    cfg.validate()
    t0 = time.perf_counter()
    timings = {}
    with stage("input"):
        ints = parse_fcidump(cfg.fcidump_path)
    nelec = cfg.n_electrons if cfg.n_electrons is not None else ints.n_electrons
    if nelec % 2 or ints.ms2:
        raise DomainError("input: closed-shell (MS2=0, even electron count) systems only")
    n_alpha = n_beta = nelec // 2
    report = RunReport(cfg.label or Path(cfg.fcidump_path).stem, ints.n_orbitals, nelec,
                       reference_energy=cfg.reference_energy)
    H = to_spin_orbitals(ints)
    occupations = None
    with stage("reference"):
        ref = build_reference(H, nelec)
        report.e_hf = ref.e_ref
        if cfg.orbital_mode == "mp2no":
            nat = mbpt2(H, ref)
            H = rotate_basis(H, nat.natural_orbital_coefficients)
            occupations = nat.natural_occupations
            ref = build_reference(H, nelec)
    timings["reference"] = time.perf_counter() - t0

    t = time.perf_counter()
    record = CcsdRecord()
    try:
        with stage("ccsd"):
            amps, e_corr = ccsd_solve(H, ref, cfg.ccsd, record=record)
    except ConvergenceError as exc:
        report.errors.append(str(exc))
        report.ccsd_record = {"iterations": record.iterations, "residual": record.residual}
        if cfg.keep_going:
            return report
        raise
    report.e_ccsd = ref.e_ref + e_corr
    report.ccsd_record = {"iterations": record.iterations, "residual": record.residual}
    timings["ccsd"] = time.perf_counter() - t

    want_fci = cfg.full_ci
    if want_fci is None:
        want_fci = n_determinants(ints.n_orbitals, n_alpha, n_beta) <= FCI_DETERMINANT_LIMIT
    if want_fci:
        t = time.perf_counter()
        try:
            with stage("fci"):
                report.e_fci = solve_ci(H, n_alpha, n_beta, cfg.davidson).energy
        except ConvergenceError as exc:
            report.errors.append(str(exc))
            if not cfg.keep_going:
                raise
        timings["fci"] = time.perf_counter() - t
    e_target = cfg.reference_energy if cfg.reference_energy is not None else report.e_fci

    for choice in cfg.active:
        with stage("active"):
            act = _active_space(choice, ref, occupations, cfg.orbital_mode)
            sigma = build_sigma_ext(split_external(amps, act))
            streams = BracketStreams(H, ref, sigma)
        for variant in cfg.variants:
            t = time.perf_counter()
            row = {"label": report.label, "variant": variant, "active_size": act.n_orbitals,
                   "active_orbitals": list(act.active_spatial)}
            try:
                with stage("variant %s/%d" % (variant, act.n_orbitals)):
                    heff = build_variant(variant, H, ref, sigma, act, streams,
                                         provenance={"fcidump": str(cfg.fcidump_path),
                                                     "orbitals": cfg.orbital_mode,
                                                     "ccsd_residual": record.residual})
                with stage("casci %s/%d" % (variant, act.n_orbitals)):
                    ci = solve_ci(heff.as_hamiltonian(), n_alpha, n_beta, cfg.davidson)
                if cfg.export_dir:
                    out = Path(cfg.export_dir)
                    out.mkdir(parents=True, exist_ok=True)
                    with stage("export"):
                        export_fcidump(heff, out / ("%s_%s_%s.fcidump" % (
                            report.label, variant, "-".join(map(str, act.active_spatial)))))
            except ConvergenceError as exc:
                row.update(status="error: %s" % exc, energy=None)
                report.errors.append(str(exc))
                report.rows.append(row)
                if not cfg.keep_going:
                    raise
                continue
            row.update(
                status="ok", energy=ci.energy, energies=[float(x) for x in ci.energies],
                error=None if e_target is None else ci.energy - e_target,
                correlation_percent=correlation_percent(ci.energy, report.e_hf, e_target),
                accuracy_percent=accuracy_percent(ci.energy, report.e_hf, e_target),
                n_determinants=ci.n_determinants, ci_iterations=ci.iterations,
                ci_residual=ci.residual, hermiticity_error=heff.hermiticity_error(),
                antisymmetry_error=heff.antisymmetry_error(),
                seconds=time.perf_counter() - t)
            report.rows.append(row)
    timings["total"] = time.perf_counter() - t0
    report.timings = timings
    return report


def sweep_geometries(cfgs):
    """Run each config; failures become error rows and the sweep continues."""
    reports, rows = [], []
    for cfg in cfgs:
        try:
            rep = run_pipeline(cfg)
        except (DownfoldError, OSError) as exc:
            label = cfg.label or Path(cfg.fcidump_path).stem
            rows.append({"label": label, "status": "error: %s" % exc})
            reports.append(None)
            continue
        reports.append(rep)
        rows.extend(rep.rows)
    return reports, rows


def export_effective_hamiltonian(cfg: RunConfig, variant, active_choice, path):
    """Build one variant for one active space and write it as FCIDUMP."""
    check_variant(variant)
    ints = parse_fcidump(cfg.fcidump_path)
    nelec = cfg.n_electrons if cfg.n_electrons is not None else ints.n_electrons
    H = to_spin_orbitals(ints)
    ref = build_reference(H, nelec)
    occupations = None
    if cfg.orbital_mode == "mp2no":
        nat = mbpt2(H, ref)
        H = rotate_basis(H, nat.natural_orbital_coefficients)
        occupations = nat.natural_occupations
        ref = build_reference(H, nelec)
    amps, _ = ccsd_solve(H, ref, cfg.ccsd)
    act = _active_space(active_choice, ref, occupations, cfg.orbital_mode)
    heff = build_variant(variant, H, ref, build_sigma_ext(split_external(amps, act)), act)
    return export_fcidump(heff, path)


# ---------------------------------------------------------------------------
# plain-text config files
# ---------------------------------------------------------------------------

def parse_active(text):
    """``"5"`` -> 5, ``"0,1,2,3,4"`` -> [0, 1, 2, 3, 4]."""
    text = text.strip()
    if "," in text:
        return [int(x) for x in text.split(",") if x.strip()]
    return int(text)


def load_config(path) -> RunConfig:
    """Read ``key = value`` lines (``#`` comments); keys mirror the CLI options.

    Keys: fcidump, orbitals, active (repeat with ';'), variants, nelec,
    reference_energy, full_ci, export_heff, keep_going, ccsd_max_iter,
    ccsd_r_tol, ccsd_e_tol, diis_depth, davidson_tol, davidson_max_iter, nroots.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string("[run]\n" + Path(path).read_text())
    except (OSError, configparser.Error) as exc:
        raise DomainError("cannot read config %s: %s" % (path, exc)) from exc
    s = cp["run"]
    if "fcidump" not in s:
        raise DomainError("config lacks 'fcidump'")
    cfg = RunConfig(s["fcidump"])
    cfg.orbital_mode = s.get("orbitals", "rhf")
    if "active" in s:
        cfg.active = [parse_active(a) for a in s["active"].split(";") if a.strip()]
    if "variants" in s:
        cfg.variants = tuple(v.strip() for v in s["variants"].split(",") if v.strip())
    if "nelec" in s:
        cfg.n_electrons = s.getint("nelec")
    if "reference_energy" in s:
        cfg.reference_energy = s.getfloat("reference_energy")
    if "full_ci" in s:
        cfg.full_ci = s.getboolean("full_ci")
    cfg.export_dir = s.get("export_heff")
    cfg.keep_going = s.getboolean("keep_going", False)
    cfg.ccsd = CcsdOptions(max_iter=s.getint("ccsd_max_iter", 200), e_tol=s.getfloat("ccsd_e_tol", 1e-9),
                           r_tol=s.getfloat("ccsd_r_tol", 1e-7), diis_depth=s.getint("diis_depth", 8))
    cfg.davidson = DavidsonOptions(tol=s.getfloat("davidson_tol", 1e-9), nroots=s.getint("nroots", 1),
                                   max_iter=s.getint("davidson_max_iter", 200))
    return cfg
