"""FCIDUMP ingestion and spin-orbital Hamiltonian construction.

Spin orbitals are interleaved: spin orbital ``2*p + s`` is spatial orbital
``p`` with spin ``s`` (0 = alpha, 1 = beta).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BasisError, ParseError

_HEADER_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class IntegralSet:
    n_orbitals: int
    n_electrons: int
    ms2: int
    core_energy: float
    h_spatial: np.ndarray
    eri_spatial: np.ndarray  # chemist convention (pq|rs)
    point_group_irreps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "h_spatial", _frozen(self.h_spatial))
        object.__setattr__(self, "eri_spatial", _frozen(self.eri_spatial))
        n = self.n_orbitals
        if self.h_spatial.shape != (n, n) or self.eri_spatial.shape != (n,) * 4:
            raise ParseError("integral shapes do not match NORB=%d" % n)


@dataclass(frozen=True)
class SpinOrbitalHamiltonian:
    """H = scalar + sum h[p,q] a+_p a_q + 1/4 sum v[p,q,r,s] a+_p a+_q a_s a_r."""

    m: int
    scalar: float
    h: np.ndarray
    v: np.ndarray  # antisymmetrized <pq||rs>
    spatial: IntegralSet | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "h", _frozen(self.h))
        object.__setattr__(self, "v", _frozen(self.v))


# ---------------------------------------------------------------------------
# FCIDUMP reading / writing
# ---------------------------------------------------------------------------

def _parse_header(text):
    body = re.sub(r"&\s*FCI", "", text, flags=re.I)
    body = re.sub(r"&\s*END|/\s*$", "", body, flags=re.I).strip()
    keys = list(_HEADER_KEY.finditer(body))
    if not keys:
        raise ParseError("FCIDUMP header has no KEY=VALUE entries")
    out = {}
    for i, km in enumerate(keys):
        end = keys[i + 1].start() if i + 1 < len(keys) else len(body)
        raw = body[km.end():end].strip().strip(",")
        vals = [t for t in re.split(r"[,\s]+", raw) if t]
        out[km.group(1).upper()] = vals
    return out


def _header_int(header, key, default=None):
    if key not in header:
        if default is None:
            raise ParseError("FCIDUMP header lacks %s" % key)
        return default
    try:
        return int(header[key][0])
    except (IndexError, ValueError) as exc:
        raise ParseError("bad value for %s: %r" % (key, header[key])) from exc


def _split_header(lines):
    for n, line in enumerate(lines):
        s = line.strip()
        if re.search(r"&\s*END", s, flags=re.I) or s == "/" or s.endswith("/"):
            return "\n".join(lines[: n + 1]), lines[n + 1:]
    raise ParseError("FCIDUMP header is not terminated by &END or /")


def _eri_orbit(i, j, k, l):
    return [(i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
            (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i)]


def parse_fcidump(path, *, conflict_tol=1e-10) -> IntegralSet:
    """Read an FCIDUMP file (1-based indices, chemist-ordered ERIs).

    Integrals are expanded from their 8-fold unique list unless the header
    carries ``PERMSYM=1``, in which case every entry is taken literally.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ParseError("cannot read %s: %s" % (path, exc)) from exc
    if not lines or not re.match(r"\s*&\s*FCI", lines[0], flags=re.I):
        raise ParseError("%s: missing &FCI header" % path)
    head, body = _split_header(lines)
    header = _parse_header(head)
    norb = _header_int(header, "NORB")
    nelec = _header_int(header, "NELEC")
    ms2 = _header_int(header, "MS2", 0)
    permsym = _header_int(header, "PERMSYM", 8)
    if norb <= 0 or nelec < 0:
        raise ParseError("invalid NORB/NELEC in header")
    if permsym not in (1, 8):
        raise ParseError("unsupported PERMSYM=%d" % permsym)
    irreps = tuple(int(x) for x in header.get("ORBSYM", []) if x)

    h = np.zeros((norb, norb))
    eri = np.zeros((norb,) * 4)
    h_set = np.zeros((norb, norb), dtype=bool)
    eri_set = np.zeros((norb,) * 4, dtype=bool)
    core = 0.0
    core_seen = False

    def assign(arr, mask, idx, val, what):
        if mask[idx] and abs(arr[idx] - val) > conflict_tol:
            raise ParseError("conflicting duplicate %s entry at %s" % (what, idx))
        arr[idx] = val
        mask[idx] = True

    for lineno, line in enumerate(body, start=len(lines) - len(body) + 1):
        tok = line.split()
        if not tok:
            continue
        if len(tok) != 5:
            raise ParseError("line %d: expected 'value i j k l'" % lineno)
        try:
            val = float(tok[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(t) for t in tok[1:])
        except ValueError as exc:
            raise ParseError("line %d: malformed record" % lineno) from exc
        if min(i, j, k, l) < 0 or max(i, j, k, l) > norb:
            raise ParseError("line %d: index out of range for NORB=%d" % (lineno, norb))
        if i and j and k and l:
            key = (i - 1, j - 1, k - 1, l - 1)
            targets = [key] if permsym == 1 else _eri_orbit(*key)
            if eri_set[key] and abs(eri[key] - val) > conflict_tol:
                raise ParseError("line %d: conflicting duplicate integral" % lineno)
            for t in set(targets):
                assign(eri, eri_set, t, val, "two-electron")
        elif i and j and not k and not l:
            for t in {(i - 1, j - 1), (j - 1, i - 1)}:
                assign(h, h_set, t, val, "one-electron")
        elif not (i or j or k or l):
            if core_seen and abs(core - val) > conflict_tol:
                raise ParseError("line %d: conflicting core energy" % lineno)
            core, core_seen = val, True
        elif i and not (j or k or l):
            continue  # orbital energy record, informational
        else:
            raise ParseError("line %d: unrecognised index pattern" % lineno)

    return IntegralSet(norb, nelec, ms2, core, h, eri, irreps)


def write_fcidump(path, ints: IntegralSet, *, tol=1e-14, permsym=8):
    """Write ``ints`` in FCIDUMP format.

    With ``permsym=8`` only the 8-fold unique integrals are written (the
    tensor must actually carry that symmetry); ``permsym=1`` writes every
    nonzero entry and marks the header accordingly.
    """
    n = ints.n_orbitals
    eri, h = ints.eri_spatial, ints.h_spatial
    orbsym = ints.point_group_irreps or (1,) * n
    out = [" &FCI NORB=%d,NELEC=%d,MS2=%d," % (n, ints.n_electrons, ints.ms2),
           "  ORBSYM=%s," % ",".join(str(x) for x in orbsym),
           "  ISYM=1,"]
    if permsym == 1:
        out.append("  PERMSYM=1,")
    out.append(" &END")
    fmt = "%23.16e %4d %4d %4d %4d"
    if permsym == 8:
        for i in range(n):
            for j in range(i + 1):
                ij = i * (i + 1) // 2 + j
                for k in range(n):
                    for l in range(k + 1):
                        if k * (k + 1) // 2 + l > ij:
                            continue
                        if abs(eri[i, j, k, l]) > tol:
                            out.append(fmt % (eri[i, j, k, l], i + 1, j + 1, k + 1, l + 1))
        for i in range(n):
            for j in range(i + 1):
                if abs(h[i, j]) > tol:
                    out.append(fmt % (h[i, j], i + 1, j + 1, 0, 0))
    else:
        for idx in zip(*np.nonzero(np.abs(eri) > tol)):
            out.append(fmt % (eri[idx], *(x + 1 for x in idx)))
        for i in range(n):
            for j in range(i + 1):
                if abs(h[i, j]) > tol:
                    out.append(fmt % (h[i, j], i + 1, j + 1, 0, 0))
    out.append(fmt % (ints.core_energy, 0, 0, 0, 0))
    Path(path).write_text("\n".join(out) + "\n")


def has_eightfold_symmetry(eri, tol=1e-10):
    return all(np.allclose(eri, eri.transpose(p), atol=tol, rtol=0)
               for p in [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)])


# ---------------------------------------------------------------------------
# spin-orbital construction and orbital rotation
# ---------------------------------------------------------------------------

_SPIN_DELTA = np.einsum("pr,qs->pqrs", np.eye(2), np.eye(2))


def to_spin_orbitals(ints: IntegralSet) -> SpinOrbitalHamiltonian:
    h_so = np.kron(ints.h_spatial, np.eye(2))
    # <pq|rs> = (pr|qs) with spin deltas on (p,r) and (q,s)
    g = np.kron(ints.eri_spatial.transpose(0, 2, 1, 3), _SPIN_DELTA)
    v = g - g.transpose(0, 1, 3, 2)
    return SpinOrbitalHamiltonian(2 * ints.n_orbitals, float(ints.core_energy), h_so, v, ints)


def _transform_eri(eri, c):
    eri = np.einsum("pqrs,pi->iqrs", eri, c, optimize=True)
    eri = np.einsum("iqrs,qj->ijrs", eri, c, optimize=True)
    eri = np.einsum("ijrs,rk->ijks", eri, c, optimize=True)
    return np.einsum("ijks,sl->ijkl", eri, c, optimize=True)


def rotate_basis(H: SpinOrbitalHamiltonian, C, *, tol=1e-10) -> SpinOrbitalHamiltonian:
    """Rotate to new spatial orbitals phi'_i = sum_p phi_p C[p, i]."""
    C = np.asarray(C, dtype=float)
    n = H.m // 2
    if C.shape != (n, n):
        raise BasisError("rotation must be %dx%d, got %s" % (n, n, C.shape))
    if not np.allclose(C.T @ C, np.eye(n), atol=tol, rtol=0):
        raise BasisError("rotation matrix is not orthogonal")
    if H.spatial is not None:
        s = H.spatial
        ints = IntegralSet(s.n_orbitals, s.n_electrons, s.ms2, s.core_energy,
                           C.T @ s.h_spatial @ C, _transform_eri(s.eri_spatial, C), ())
        return to_spin_orbitals(ints)
    cs = np.kron(C, np.eye(2))
    h = cs.T @ H.h @ cs
    return SpinOrbitalHamiltonian(H.m, H.scalar, h, _transform_eri(H.v, cs))


def spin_orbital_from_arrays(scalar, h_spatial, eri_spatial, n_electrons=0):
    """Convenience constructor from in-memory spatial integrals."""
    n = len(h_spatial)
    return to_spin_orbitals(IntegralSet(n, n_electrons, 0, scalar, h_spatial, eri_spatial))
