"""Hamiltonian builders for spin bonds, small spin lattices, the Hubbard atom
and the local Kondo limit.

Fermions are mapped onto site-flavors with a Jordan-Wigner string.  An
occupied flavor is spin-up (Z = +1), so

    n = (1 + Z)/2,   c = Z_0 ... Z_{k-1} sigma^-_k,   gamma^z = n - 1/2 = s^z.

With the Majorana triple gamma^x = (c + c^dag)/2 and
gamma^y = (c^dag - c)/(2i), a single flavor gives gamma^a = s^a exactly.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .algebra import OperatorSum, PauliWord, spin
from .errors import ResourceError, ValidationError

DEFAULT_SITE_CAP = 6
AXES = "xyz"

FLAVOR_UP, FLAVOR_DN, MOMENT = "up", "dn", "moment"
DEFAULT_FLAVOR_ORDER = (FLAVOR_UP, FLAVOR_DN, MOMENT)


class StringBearingWarning(UserWarning):
    """A single-fermion term whose spin image carries a Jordan-Wigner string."""


def _axis(a: str) -> str:
    a = str(a).lower()
    if a not in AXES:
        raise ValidationError(f"unknown spin axis {a!r}; use one of x, y, z")
    return a


def _real(value, what: str) -> float:
    c = complex(value)
    if c.imag != 0 or not np.isfinite(c.real):
        raise ValidationError(f"{what} must be a finite real number, got {value!r}")
    return float(c.real)


@dataclass(frozen=True)
class ModelSpec:
    """Grade-organized spin Hamiltonian.

    ``fields`` maps ``(site, axis)`` to h^axis_site and ``couplings`` maps
    ``(i, j, alpha, beta)`` to J^{alpha beta}_{ij}, which multiplies
    s^alpha_i s^beta_j.
    """

    n_sites: int
    fields: Mapping[tuple[int, str], float] = field(default_factory=dict)
    couplings: Mapping[tuple[int, int, str, str], float] = field(default_factory=dict)
    kind: str = "qsm-lattice"

    def __post_init__(self):
        if not isinstance(self.n_sites, (int, np.integer)) or self.n_sites < 1:
            raise ValidationError(f"n_sites must be a positive integer, got {self.n_sites!r}")
        if self.kind not in ("qsm-bond", "qsm-lattice", "hubbard-atom", "kondo-local"):
            raise ValidationError(f"unknown model kind {self.kind!r}")
        fields = {}
        for (site, a), h in dict(self.fields).items():
            self._check_site(site)
            fields[(int(site), _axis(a))] = _real(h, f"field h^{a}_{site}")
        couplings = {}
        for (i, j, a, b), J in dict(self.couplings).items():
            self._check_site(i)
            self._check_site(j)
            if i == j:
                raise ValidationError(f"self-bond ({i}, {j}) is not allowed in inter-site couplings")
            key = (int(i), int(j), _axis(a), _axis(b))
            couplings[key] = couplings.get(key, 0.0) + _real(J, f"coupling J^{a}{b}_{i}{j}")
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "couplings", couplings)

    def _check_site(self, s):
        if not isinstance(s, (int, np.integer)) or not 0 <= s < self.n_sites:
            raise ValidationError(f"site index {s!r} out of range for {self.n_sites} sites")

    @classmethod
    def chain(cls, n_sites: int, J: float | Mapping[str, float] = 1.0,
              h: Mapping[str, float] | None = None, periodic: bool = False) -> "ModelSpec":
        """Nearest-neighbour chain; a scalar ``J`` means isotropic Heisenberg."""
        if isinstance(J, Mapping):
            diag = {(_axis(k[0]), _axis(k[-1])): v for k, v in J.items()}
        else:
            diag = {(a, a): J for a in AXES}
        bonds = [(i, i + 1) for i in range(n_sites - 1)]
        if periodic and n_sites > 2:
            bonds.append((n_sites - 1, 0))
        couplings = {(i, j, a, b): v for i, j in bonds for (a, b), v in diag.items()}
        fields = {(s, a): v for s in range(n_sites) for a, v in (h or {}).items()}
        return cls(n_sites, fields, couplings)


def build_qsm_bond(Jz: float, hz: float, hx: float) -> OperatorSum:
    """H = Jz s^z_a s^z_b + hz (s^z_a + s^z_b) + hx (s^x_a + s^x_b) on two sites."""
    Jz, hz, hx = (_real(v, name) for v, name in ((Jz, "Jz"), (hz, "hz"), (hx, "hx")))
    H = Jz * spin(2, 0, "z") * spin(2, 1, "z")
    H = H + hz * (spin(2, 0, "z") + spin(2, 1, "z"))
    H = H + hx * (spin(2, 0, "x") + spin(2, 1, "x"))
    return H


def build_qsm_lattice(spec: ModelSpec, site_cap: int = DEFAULT_SITE_CAP) -> OperatorSum:
    """Sum of grade-1 field terms and grade-2 couplings of ``spec``."""
    n = spec.n_sites
    if n > site_cap:
        raise ResourceError(
            f"{n} site-flavors exceed the cap of {site_cap} (dense Hilbert space 2^{n} = {2**n})"
        )
    H = OperatorSum.zero(n)
    for (site, a), h in spec.fields.items():
        H = H + h * spin(n, site, a)
    for (i, j, a, b), J in spec.couplings.items():
        H = H + J * (spin(n, i, a) * spin(n, j, b))
    return H


# -- fermions through Jordan-Wigner -------------------------------------------

def annihilator(n_sites: int, k: int) -> OperatorSum:
    """c_k = Z_0 ... Z_{k-1} sigma^-_k with sigma^- = |down><up| = (X - iY)/2."""
    if not 0 <= k < n_sites:
        raise ValidationError(f"flavor index {k} out of range for {n_sites} site-flavors")
    out = OperatorSum.identity(n_sites)
    for j in range(k):
        out = out * OperatorSum.from_word(PauliWord.single(n_sites, j, "Z"))
    return out * spin(n_sites, k, "-")


def creator(n_sites: int, k: int) -> OperatorSum:
    return annihilator(n_sites, k).dagger()


def number(n_sites: int, k: int) -> OperatorSum:
    return creator(n_sites, k) * annihilator(n_sites, k)


def majorana(n_sites: int, k: int, axis: str) -> OperatorSum:
    """gamma^x = (c + c^dag)/2, gamma^y = (c^dag - c)/(2i), gamma^z = c^dag c - 1/2."""
    a = _axis(axis)
    c, cd = annihilator(n_sites, k), creator(n_sites, k)
    if a == "x":
        return (c + cd) / 2
    if a == "y":
        return (cd - c) / 2j
    return cd * c - 0.5 * OperatorSum.identity(n_sites)


def _flavor_fields(mu, name: str) -> dict[str, float]:
    """A scalar is the z component; a mapping or 3-sequence gives components."""
    if mu is None:
        return {}
    if isinstance(mu, Mapping):
        return {_axis(k): _real(v, f"{name}^{k}") for k, v in mu.items()}
    if isinstance(mu, (Sequence, np.ndarray)) and not isinstance(mu, str):
        if len(mu) != 3:
            raise ValidationError(f"{name} must have three components (x, y, z)")
        return {a: _real(v, f"{name}^{a}") for a, v in zip(AXES, mu)}
    return {"z": _real(mu, name)}


def _fermion_field_terms(n: int, positions: Mapping[str, int], mu: Mapping, label: str) -> OperatorSum:
    H = OperatorSum.zero(n)
    for flavor, comps in mu.items():
        comps = _flavor_fields(comps, f"{label}_{flavor}")
        for a, v in comps.items():
            if v == 0:
                continue
            if a != "z" and positions[flavor] > 0:
                warnings.warn(
                    f"{label}^{a}_{flavor} is a single-fermion term; its spin image carries a "
                    "Jordan-Wigner string",
                    StringBearingWarning,
                    stacklevel=3,
                )
            H = H + v * majorana(n, positions[flavor], a)
    return H


def build_hubbard_atom(mu_up, mu_dn, U: float) -> OperatorSum:
    """sum_sigma mu_sigma . gamma_sigma + (U/2) gamma^z_up gamma^z_dn on flavors (up, dn).

    Scalars are chemical potentials (the gamma^z channel).  Transverse
    components are accepted but trigger :class:`StringBearingWarning` when
    they act on the second flavor.
    """
    U = _real(U, "U")
    pos = {FLAVOR_UP: 0, FLAVOR_DN: 1}
    H = _fermion_field_terms(2, pos, {FLAVOR_UP: mu_up, FLAVOR_DN: mu_dn}, "mu")
    return H + (U / 2) * (majorana(2, 0, "z") * majorana(2, 1, "z"))


@dataclass(frozen=True)
class OccupationForm:
    """E(n_up, n_dn) = eps_up n_up + eps_dn n_dn + U n_up n_dn + const."""

    eps_up: float
    eps_dn: float
    U: float
    const: float

    def energy(self, n_up: int, n_dn: int) -> float:
        return self.eps_up * n_up + self.eps_dn * n_dn + self.U * n_up * n_dn + self.const

    def spectrum(self) -> np.ndarray:
        return np.sort([self.energy(a, b) for a in (0, 1) for b in (0, 1)])


def hubbard_occupation_form(mu_up: float, mu_dn: float, U: float) -> OccupationForm:
    """Occupation-number form of :func:`build_hubbard_atom` with scalar potentials.

    Substituting gamma^z = n - 1/2 gives eps_sigma = mu_sigma - U/4, an
    on-site repulsion U/2 and const = -(mu_up + mu_dn)/2 + U/8.
    """
    mu_up, mu_dn, U = _real(mu_up, "mu_up"), _real(mu_dn, "mu_dn"), _real(U, "U")
    return OccupationForm(mu_up - U / 4, mu_dn - U / 4, U / 2, -(mu_up + mu_dn) / 2 + U / 8)


def hubbard_from_occupation(eps_up: float, eps_dn: float, U_occ: float) -> tuple[float, float, float, float]:
    """Inverse map: builder parameters (mu_up, mu_dn, U) and the constant shift."""
    U = 2 * U_occ
    mu_up, mu_dn = eps_up + U / 4, eps_dn + U / 4
    return mu_up, mu_dn, U, hubbard_occupation_form(mu_up, mu_dn, U).const


def build_kondo_local(mu=None, h=None, Jk: float = 0.0,
                      flavor_order: Sequence[str] = DEFAULT_FLAVOR_ORDER) -> OperatorSum:
    """Local Kondo limit on three site-flavors.

    H = sum_sigma mu_sigma . gamma_sigma + h . S + Jk S . S_c with
    S_c^a = sum c^dag_sigma (sigma^a/2)_{sigma sigma'} c_sigma'.

    ``mu`` maps ``"up"``/``"dn"`` to a scalar (z) or to components; ``h`` is a
    scalar (z) or components.  ``flavor_order`` fixes which site-flavor hosts
    each party; the Jordan-Wigner string runs over the electron flavors in
    that order.
    """
    order = tuple(flavor_order)
    if sorted(order) != sorted(DEFAULT_FLAVOR_ORDER):
        raise ValidationError(f"flavor_order must be a permutation of {DEFAULT_FLAVOR_ORDER}")
    pos = {f: i for i, f in enumerate(order)}
    n = 3
    Jk = _real(Jk, "Jk")
    c = {f: _jw_annihilator(n, pos, f) for f in (FLAVOR_UP, FLAVOR_DN)}
    cd = {f: op.dagger() for f, op in c.items()}
    H = OperatorSum.zero(n)
    for flavor, comps in (mu or {}).items():
        if flavor not in (FLAVOR_UP, FLAVOR_DN):
            raise ValidationError(f"mu flavors are 'up' and 'dn', got {flavor!r}")
        for a, v in _flavor_fields(comps, f"mu_{flavor}").items():
            if v == 0:
                continue
            if a == "x":
                g = (c[flavor] + cd[flavor]) / 2
            elif a == "y":
                g = (cd[flavor] - c[flavor]) / 2j
            else:
                g = cd[flavor] * c[flavor] - 0.5 * OperatorSum.identity(n)
            H = H + v * g
    for a, v in _flavor_fields(h, "h").items():
        H = H + v * spin(n, pos[MOMENT], a)
    if Jk:
        Sc = electron_spin(c)
        for a in AXES:
            H = H + Jk * (spin(n, pos[MOMENT], a) * Sc[a])
    return H


_PAULI_HALF = {
    "x": np.array([[0, 1], [1, 0]]) / 2,
    "y": np.array([[0, -1j], [1j, 0]]) / 2,
    "z": np.array([[1, 0], [0, -1]]) / 2,
}


def electron_spin(c: Mapping[str, OperatorSum]) -> dict[str, OperatorSum]:
    """S_c^a = sum c^dag_s (sigma^a/2)_{s s'} c_s' with flavors ordered (up, dn)."""
    flavors = (FLAVOR_UP, FLAVOR_DN)
    n = c[FLAVOR_UP].n_sites
    out = {}
    for a in AXES:
        S = OperatorSum.zero(n)
        for i, s in enumerate(flavors):
            for j, t in enumerate(flavors):
                m = _PAULI_HALF[a][i, j]
                if m:
                    S = S + m * (c[s].dagger() * c[t])
        out[a] = S
    return out


def _jw_annihilator(n: int, pos: Mapping[str, int], flavor: str) -> OperatorSum:
    """Annihilator with a string over electron flavors that precede ``flavor``."""
    k = pos[flavor]
    out = OperatorSum.identity(n)
    for other in (FLAVOR_UP, FLAVOR_DN):
        if other != flavor and pos[other] < k:
            out = out * OperatorSum.from_word(PauliWord.single(n, pos[other], "Z"))
    return out * spin(n, k, "-")


def kondo_operators(flavor_order: Sequence[str] = DEFAULT_FLAVOR_ORDER) -> dict[str, OperatorSum]:
    """Electron operators, occupations and spins for the three-flavor problem."""
    order = tuple(flavor_order)
    pos = {f: i for i, f in enumerate(order)}
    c = {f: _jw_annihilator(3, pos, f) for f in (FLAVOR_UP, FLAVOR_DN)}
    out = {f"c_{f}": op for f, op in c.items()}
    out.update({f"cdag_{f}": op.dagger() for f, op in c.items()})
    out.update({f"n_{f}": op.dagger() * op for f, op in c.items()})
    out["n_e"] = out[f"n_{FLAVOR_UP}"] + out[f"n_{FLAVOR_DN}"]
    for a, S in electron_spin(c).items():
        out[f"Sc_{a}"] = S
        out[f"S_{a}"] = spin(3, pos[MOMENT], a)
    return out
