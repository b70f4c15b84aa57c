"""Complete operator basis sets, expectation-value states and cumulants.

A state is carried as the table of expectation values of Pauli words.  Pauli
words are Hermitian, so every entry is real, and the identity word always has
expectation 1.  With unnormalized words the density matrix is

    rho = sum_w <w> w / 2^N.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra import (
    OperatorSum,
    PauliWord,
    expand_operator,
    levi_civita,
    spin,
)
from .errors import DimensionError, MissingDataError, ValidationError

MAX_CUMULANT_ORDER = 4
STATE_TOL = 1e-12


@dataclass(frozen=True)
class GradedBasis:
    """Pauli words grouped by grade (number of non-identity letters)."""

    n_sites: int
    max_grade: int
    grades: tuple[tuple[PauliWord, ...], ...]

    @property
    def words(self) -> tuple[PauliWord, ...]:
        return tuple(w for g in self.grades for w in g)

    @property
    def is_complete(self) -> bool:
        return self.max_grade == self.n_sites

    def __len__(self):
        return sum(len(g) for g in self.grades)

    def __iter__(self):
        return iter(self.words)

    def __contains__(self, word):
        return isinstance(word, PauliWord) and word.n_sites == self.n_sites and word.grade <= self.max_grade


def enumerate_cobs(n_sites: int, max_grade: int | None = None) -> GradedBasis:
    """All Pauli words on ``n_sites`` sites with grade <= ``max_grade``.

    Words are ordered by grade, then canonically within a grade.
    """
    if max_grade is None:
        max_grade = n_sites
    if not 0 <= max_grade <= n_sites:
        raise ValidationError(
            f"max_grade must satisfy 0 <= max_grade <= n_sites; got max_grade={max_grade}, n_sites={n_sites}"
        )
    grades = []
    for g in range(max_grade + 1):
        words = []
        for sites in itertools.combinations(range(n_sites), g):
            for letters in itertools.product("XYZ", repeat=g):
                chars = ["I"] * n_sites
                for s, ch in zip(sites, letters):
                    chars[s] = ch
                words.append(PauliWord.from_string("".join(chars)))
        grades.append(tuple(sorted(words)))
    return GradedBasis(n_sites, max_grade, tuple(grades))


@dataclass(frozen=True)
class StateSpec:
    """A state given by expectation values over a graded basis.

    ``psi`` is an optional dense wavefunction (site 0 is the most significant
    qubit, |up> = index 0) kept for oracle work; when present the table must
    agree with it.
    """

    basis: GradedBasis
    expectations: Mapping[PauliWord, float]
    psi: np.ndarray | None = None
    label: str = ""
    _keys: np.ndarray = field(init=False, repr=False, compare=False)
    _vals: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.basis.n_sites
        table = {}
        for w, v in self.expectations.items():
            word = w if isinstance(w, PauliWord) else PauliWord.from_string(w)
            if word.n_sites != n:
                raise DimensionError(f"word {word} does not act on {n} sites")
            v = complex(v)
            if abs(v.imag) > STATE_TOL:
                raise ValidationError(f"expectation of Hermitian word {word} must be real, got {v}")
            if abs(v.real) > 1 + STATE_TOL:
                raise ValidationError(f"|<{word}>| = {abs(v.real)} exceeds 1")
            table[word] = float(v.real)
        ident = PauliWord.identity(n)
        if abs(table.get(ident, 1.0) - 1.0) > STATE_TOL:
            raise ValidationError(f"expectation of the identity word must be 1, got {table[ident]}")
        table[ident] = 1.0
        ordered = dict(sorted(table.items()))
        object.__setattr__(self, "expectations", ordered)
        keys = np.array([w.key for w in ordered], dtype=np.uint64)
        vals = np.array(list(ordered.values()), dtype=float)
        order = np.argsort(keys)
        object.__setattr__(self, "_keys", keys[order])
        object.__setattr__(self, "_vals", vals[order])
        if self.psi is not None:
            psi = np.asarray(self.psi, dtype=complex).ravel()
            if psi.size != 2**n:
                raise DimensionError(f"wavefunction has length {psi.size}, expected {2**n}")
            object.__setattr__(self, "psi", psi)
            ref = expectations_from_state(psi, self.basis)
            for w, v in ordered.items():
                if w in ref.expectations and abs(ref.expectations[w] - v) > STATE_TOL:
                    raise ValidationError(f"<{w}> = {v} disagrees with the wavefunction ({ref.expectations[w]})")

    @property
    def n_sites(self) -> int:
        return self.basis.n_sites

    def missing(self, op: OperatorSum) -> list[PauliWord]:
        keys = op.key_array()
        idx = np.searchsorted(self._keys, keys)
        idx = np.minimum(idx, max(self._keys.size - 1, 0))
        absent = self._keys[idx] != keys if self._keys.size else np.ones(keys.size, bool)
        return [w for w, a in zip(op.words(), absent) if a]

    def expectation(self, op) -> complex:
        """<op> = sum_w c_w <w>; raises MissingDataError for uncovered words."""
        if isinstance(op, (PauliWord, str)):
            op = OperatorSum.from_word(op)
        if op.n_sites != self.n_sites:
            raise DimensionError(f"operator acts on {op.n_sites} sites, state on {self.n_sites}")
        if not len(op):
            return 0j
        keys = op.key_array()
        idx = np.searchsorted(self._keys, keys)
        ok = idx < self._keys.size
        ok[ok] = self._keys[idx[ok]] == keys[ok]
        if not ok.all():
            raise MissingDataError([w for w, good in zip(op.words(), ok) if not good])
        return complex(np.dot(op.coefficient_array(), self._vals[idx]))

    def value(self, word) -> float:
        return self.expectation(word).real

    def to_rows(self) -> list[tuple[str, float]]:
        return [(w.letters, v) for w, v in self.expectations.items()]

    @classmethod
    def from_rows(cls, n_sites: int, rows: Iterable, label: str = "") -> "StateSpec":
        table = {PauliWord.from_string(w): float(v) for w, v in rows}
        grade = max((w.grade for w in table), default=0)
        return cls(enumerate_cobs(n_sites, grade), table, label=label)


def expectations_from_state(psi, basis: GradedBasis | None = None, label: str = "") -> StateSpec:
    """Expectation table <psi|w|psi> for every word of ``basis``."""
    psi = np.asarray(psi, dtype=complex).ravel()
    n = psi.size.bit_length() - 1
    if psi.size < 2 or (1 << n) != psi.size:
        raise DimensionError(f"wavefunction length {psi.size} is not a power of two")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > STATE_TOL:
        raise ValidationError(f"wavefunction norm is {norm!r}, expected 1 within {STATE_TOL}")
    if basis is None:
        basis = enumerate_cobs(n)
    if basis.n_sites != n:
        raise DimensionError(f"basis has {basis.n_sites} sites, wavefunction has {n}")
    rho = expand_operator(np.outer(psi, psi.conj()))
    vec = rho.to_vector() * 2**n
    words = basis.words
    keys = np.array([w.key for w in words], dtype=np.int64)
    vals = vec[keys].real
    vals[np.abs(vals) < 1e-15] = 0.0
    table = dict(zip(words, vals))
    state = StateSpec.__new__(StateSpec)
    # skip the wavefunction cross-check: the table was derived from psi itself
    StateSpec.__init__(state, basis, table, None, label)
    object.__setattr__(state, "psi", psi)
    return state


def density_matrix_from_expectations(state: StateSpec) -> np.ndarray:
    """rho = sum_w <w> w / 2^N over the complete basis."""
    n = state.n_sites
    full = enumerate_cobs(n)
    absent = [w for w in full.words if w not in state.expectations]
    if absent:
        raise MissingDataError(absent, context="density matrix needs the complete basis")
    rho = OperatorSum(n, state.expectations.items()) / 2**n
    return rho.to_dense()


def minimum_eigenvalue(state: StateSpec) -> float:
    """Positivity diagnostic for expectation tables that may not be physical."""
    rho = density_matrix_from_expectations(state)
    return float(np.linalg.eigvalsh(rho)[0])


# -- cumulants ---------------------------------------------------------------

def set_partitions(items: Sequence):
    """Yield every set partition of ``items``; blocks keep the input order."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first], *part]
        for k in range(len(part)):
            yield [*part[:k], [first, *part[k]], *part[k + 1:]]


def _product(ops: Sequence[OperatorSum]) -> OperatorSum:
    out = ops[0]
    for op in ops[1:]:
        out = out * op
    return out


def cumulant(state: StateSpec, factors: Sequence[OperatorSum]) -> complex:
    """Connected average of the ordered product of single-site factors.

    Sum over set partitions pi of the factor list of
    (-1)^(|pi|-1) (|pi|-1)! prod_{B in pi} <prod_{k in B} factor_k>.
    """
    factors = list(factors)
    n = len(factors)
    if n == 0:
        raise ValidationError("cumulant needs at least one factor")
    if n > MAX_CUMULANT_ORDER:
        raise ValidationError(f"cumulants are limited to {MAX_CUMULANT_ORDER} factors, got {n}")
    supports = []
    for k, f in enumerate(factors):
        if f.n_sites != state.n_sites:
            raise DimensionError(f"factor {k} acts on {f.n_sites} sites, state on {state.n_sites}")
        sup = f.support()
        if len(sup) > 1:
            raise ValidationError(f"factor {k} is not a single-site operator (support {sorted(sup)})")
        supports.append(sup)
    for i in range(n):
        for j in range(i + 1, n):
            if supports[i] & supports[j]:
                raise ValidationError(f"factors {i} and {j} overlap on site {sorted(supports[i])[0]}")
    moments: dict[tuple[int, ...], complex] = {}

    def moment(block):
        key = tuple(block)
        if key not in moments:
            moments[key] = state.expectation(_product([factors[k] for k in key]))
        return moments[key]

    total = 0j
    for part in set_partitions(range(n)):
        l = len(part)
        term = (-1) ** (l - 1) * math.factorial(l - 1)
        for block in part:
            term *= moment(block)
        total += term
    return complex(total)


def cumulant_operator(state: StateSpec, u_i: OperatorSum, u_j: OperatorSum) -> OperatorSum:
    """(u_i - <u_i>)(u_j - <u_j>); its expectation is the grade-2 cumulant."""
    a = u_i - state.expectation(u_i)
    b = u_j - state.expectation(u_j)
    return a * b


# -- two-spin constructions --------------------------------------------------

@dataclass(frozen=True)
class Grade2Pair:
    """Composite two-spin operators S, eta, B_A, B_S, D on sites (a, b)."""

    n_sites: int
    sites: tuple[int, int]
    S: dict
    eta: dict
    B_A: dict
    B_S: dict
    D: dict

    def operators(self) -> dict[str, OperatorSum]:
        out = {"I": OperatorSum.identity(self.n_sites)}
        for name in ("S", "eta", "B_S", "B_A", "D"):
            table = getattr(self, name)
            for c in "xyz":
                out[f"{name}^{c}"] = table[c]
        return out


def grade2_pair(n_sites: int, a: int = 0, b: int = 1) -> Grade2Pair:
    if a == b:
        raise ValidationError("grade-2 pair needs two distinct sites")
    sa = {c: spin(n_sites, a, c) for c in "xyz"}
    sb = {c: spin(n_sites, b, c) for c in "xyz"}
    axes = "xyz"
    S = {c: sa[c] + sb[c] for c in axes}
    eta = {c: sa[c] - sb[c] for c in axes}
    D = {c: 2 * sa[c] * sb[c] for c in axes}
    B_A, B_S = {}, {}
    for g, cg in enumerate(axes):
        anti = OperatorSum.zero(n_sites)
        sym = OperatorSum.zero(n_sites)
        for i, ci in enumerate(axes):
            for j, cj in enumerate(axes):
                eps = levi_civita(i, j, g)
                if eps:
                    anti = anti + eps * sa[ci] * sb[cj]
                    sym = sym + eps * eps * (sa[ci] * sb[cj] + sa[cj] * sb[ci])
        B_A[cg] = 2 * anti
        B_S[cg] = 2 * sym
    return Grade2Pair(n_sites, (a, b), S, eta, B_A, B_S, D)


def basis_state(n_sites: int, spins: str) -> np.ndarray:
    """Computational basis vector from a string such as ``"ud"`` (u = up)."""
    if len(spins) != n_sites or set(spins) - set("ud"):
        raise ValidationError(f"spin string {spins!r} must have {n_sites} letters from 'ud'")
    idx = int("".join("0" if ch == "u" else "1" for ch in spins), 2)
    psi = np.zeros(2**n_sites, dtype=complex)
    psi[idx] = 1.0
    return psi


def two_spin_state(theta: float) -> StateSpec:
    """sin(theta)|ud> + cos(theta)|du> with its full 16-word table.

    Site a (site 0) carries <s^z_a> = -cos(2 theta)/2, so theta = pi/2 is |ud>.
    """
    psi = math.sin(theta) * basis_state(2, "ud") + math.cos(theta) * basis_state(2, "du")
    return expectations_from_state(psi, enumerate_cobs(2), label=f"theta={theta!r}")
