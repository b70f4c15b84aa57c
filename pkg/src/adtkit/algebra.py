"""Pauli-word operator algebra for N spin-1/2 site-flavors.

Words are stored in symplectic form: two integers ``x`` and ``z`` whose bit
``i`` describes site ``i``.  A word is the phase-free Hermitian operator

    P(x, z) = i^{x.z} X^x Z^z        (so Y = iXZ)

and is kept unnormalized (entries 0, +-1, +-i).  The trace inner product divides
by 2^N, which makes the words orthonormal.

Text form puts site 0 leftmost, e.g. ``"XIZY"``.  Canonical order of words is
lexicographic in (site, letter) with I < X < Y < Z, which coincides with plain
string order.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionError, ShapeError, ValidationError

LETTERS = "IXYZ"
PRUNE_THRESHOLD = 1e-14
MAX_SITES = 31

_IPOW = np.array([1, 1j, -1, -1j], dtype=complex)

# (x, z) bits for I, X, Y, Z
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}

_PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def _popcount(a):
    return np.bitwise_count(a).astype(np.int64)


def _lex_keys(x: np.ndarray, z: np.ndarray, n: int) -> np.ndarray:
    """Base-4 key with site 0 as the most significant digit (I=0, X=1, Y=2, Z=3)."""
    x = x.astype(np.uint64)
    z = z.astype(np.uint64)
    key = np.zeros(x.shape, dtype=np.uint64)
    one = np.uint64(1)
    for i in range(n):
        zi = (z >> np.uint64(i)) & one
        lo = ((x ^ z) >> np.uint64(i)) & one
        key |= ((zi << one) | lo) << np.uint64(2 * (n - 1 - i))
    return key


def _decode_keys(keys: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    keys = np.asarray(keys, dtype=np.uint64)
    x = np.zeros(keys.shape, dtype=np.uint64)
    z = np.zeros(keys.shape, dtype=np.uint64)
    one = np.uint64(1)
    for i in range(n):
        code = (keys >> np.uint64(2 * (n - 1 - i))) & np.uint64(3)
        zi = code >> one
        xi = (code & one) ^ zi
        x |= xi << np.uint64(i)
        z |= zi << np.uint64(i)
    return x, z


def _check_sites(n_sites: int) -> None:
    if not isinstance(n_sites, (int, np.integer)) or n_sites < 1:
        raise ValidationError(f"n_sites must be a positive integer, got {n_sites!r}")
    if n_sites > MAX_SITES:
        raise ValidationError(f"n_sites={n_sites} exceeds the supported maximum {MAX_SITES}")


@functools.total_ordering
@dataclass(frozen=True)
class PauliWord:
    """A coefficient-free tensor product of I, X, Y, Z over ``n_sites`` sites."""

    n_sites: int
    x: int
    z: int

    def __post_init__(self):
        _check_sites(self.n_sites)
        limit = 1 << self.n_sites
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValidationError("x/z bit masks exceed n_sites")

    @classmethod
    def from_string(cls, letters: str) -> "PauliWord":
        letters = letters.strip().upper()
        if not letters:
            raise ValidationError("empty Pauli word")
        x = z = 0
        for i, ch in enumerate(letters):
            try:
                xb, zb = _LETTER_BITS[ch]
            except KeyError:
                raise ValidationError(f"unknown Pauli letter {ch!r} in {letters!r}") from None
            x |= xb << i
            z |= zb << i
        return cls(len(letters), x, z)

    @classmethod
    def identity(cls, n_sites: int) -> "PauliWord":
        return cls(n_sites, 0, 0)

    @classmethod
    def single(cls, n_sites: int, site: int, letter: str) -> "PauliWord":
        if not 0 <= site < n_sites:
            raise ValidationError(f"site {site} out of range for {n_sites} sites")
        xb, zb = _LETTER_BITS[letter.upper()]
        return cls(n_sites, xb << site, zb << site)

    @property
    def letters(self) -> str:
        out = []
        for i in range(self.n_sites):
            xb = (self.x >> i) & 1
            zb = (self.z >> i) & 1
            out.append("IZXY"[xb * 2 + zb])
        return "".join(out)

    @property
    def grade(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x | self.z
        return tuple(i for i in range(self.n_sites) if (m >> i) & 1)

    @property
    def key(self) -> int:
        return int(_lex_keys(np.array([self.x]), np.array([self.z]), self.n_sites)[0])

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def commutes_with(self, other: "PauliWord") -> bool:
        _same_sites(self.n_sites, other.n_sites)
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def to_dense(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for ch in self.letters:
            out = np.kron(out, _PAULI[LETTERS.index(ch)])
        return out

    def __str__(self):
        return self.letters

    def __repr__(self):
        return f"PauliWord({self.letters!r})"

    def __lt__(self, other):
        if not isinstance(other, PauliWord):
            return NotImplemented
        return (self.n_sites, self.letters) < (other.n_sites, other.letters)


def _same_sites(n1: int, n2: int) -> None:
    if n1 != n2:
        raise DimensionError(f"site-count mismatch: {n1} vs {n2}")


def word_product(u: PauliWord, v: PauliWord) -> tuple[complex, PauliWord]:
    """Return ``(phase, w)`` with ``u v = phase * w`` and phase in {1, i, -1, -i}."""
    _same_sites(u.n_sites, v.n_sites)
    x3 = u.x ^ v.x
    z3 = u.z ^ v.z
    e = (
        (u.x & u.z).bit_count()
        + (v.x & v.z).bit_count()
        - (x3 & z3).bit_count()
        + 2 * (u.z & v.x).bit_count()
    ) % 4
    return complex(_IPOW[e]), PauliWord(u.n_sites, x3, z3)


def _as_word(w, n_sites=None) -> PauliWord:
    if isinstance(w, PauliWord):
        word = w
    elif isinstance(w, str):
        word = PauliWord.from_string(w)
    else:
        raise ValidationError(f"cannot interpret {w!r} as a Pauli word")
    if n_sites is not None:
        _same_sites(n_sites, word.n_sites)
    return word


class OperatorSum:
    """Sparse complex linear combination of Pauli words on ``n_sites`` sites.

    Instances are treated as immutable.  Coefficients with magnitude below
    ``PRUNE_THRESHOLD`` are dropped after every arithmetic operation, and terms
    are stored in canonical word order.
    """

    __slots__ = ("n_sites", "_keys", "_x", "_z", "_c")

    def __init__(self, n_sites: int, terms: Mapping | Iterable | None = None):
        _check_sites(n_sites)
        if terms is None:
            terms = ()
        if isinstance(terms, Mapping):
            terms = terms.items()
        xs, zs, cs = [], [], []
        for w, c in terms:
            word = _as_word(w, n_sites)
            xs.append(word.x)
            zs.append(word.z)
            cs.append(complex(c))
        self._set(
            n_sites,
            np.array(xs, dtype=np.uint64),
            np.array(zs, dtype=np.uint64),
            np.array(cs, dtype=complex),
        )

    def _set(self, n, x, z, c):
        self.n_sites = n
        keys = _lex_keys(x, z, n)
        if keys.size:
            uniq, inv = np.unique(keys, return_inverse=True)
            inv = inv.ravel()
            re = np.bincount(inv, weights=c.real, minlength=uniq.size)
            im = np.bincount(inv, weights=c.imag, minlength=uniq.size)
            coeff = re + 1j * im
            keep = np.abs(coeff) >= PRUNE_THRESHOLD
            keys = uniq[keep]
            coeff = coeff[keep]
        else:
            coeff = np.zeros(0, dtype=complex)
        self._keys = keys
        self._x, self._z = _decode_keys(keys, n)
        self._c = coeff

    @classmethod
    def _from_arrays(cls, n, x, z, c) -> "OperatorSum":
        obj = cls.__new__(cls)
        obj._set(n, np.asarray(x, dtype=np.uint64), np.asarray(z, dtype=np.uint64),
                 np.asarray(c, dtype=complex))
        return obj

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, n_sites: int) -> "OperatorSum":
        return cls(n_sites)

    @classmethod
    def identity(cls, n_sites: int, coeff: complex = 1.0) -> "OperatorSum":
        return cls(n_sites, [(PauliWord.identity(n_sites), coeff)])

    @classmethod
    def from_word(cls, word, coeff: complex = 1.0) -> "OperatorSum":
        word = _as_word(word)
        return cls(word.n_sites, [(word, coeff)])

    @classmethod
    def from_vector(cls, n_sites: int, vec: np.ndarray) -> "OperatorSum":
        """Build from a length-4^n coefficient vector indexed by canonical word key."""
        vec = np.asarray(vec, dtype=complex).ravel()
        if vec.size != 4**n_sites:
            raise ShapeError(f"expected a vector of length {4**n_sites}, got {vec.size}")
        idx = np.nonzero(np.abs(vec) >= PRUNE_THRESHOLD)[0].astype(np.uint64)
        x, z = _decode_keys(idx, n_sites)
        return cls._from_arrays(n_sites, x, z, vec[idx.astype(np.int64)])

    @classmethod
    def from_triples(cls, n_sites: int, triples: Iterable) -> "OperatorSum":
        """Inverse of :meth:`to_triples`."""
        return cls(n_sites, [(w, complex(float(re), float(im))) for w, re, im in triples])

    # -- views --------------------------------------------------------------

    @property
    def terms(self) -> dict[PauliWord, complex]:
        return dict(self.items())

    def items(self) -> list[tuple[PauliWord, complex]]:
        return [
            (PauliWord(self.n_sites, int(x), int(z)), complex(c))
            for x, z, c in zip(self._x, self._z, self._c)
        ]

    def words(self) -> list[PauliWord]:
        return [w for w, _ in self.items()]

    def coefficient(self, word) -> complex:
        word = _as_word(word, self.n_sites)
        k = np.uint64(word.key)
        i = np.searchsorted(self._keys, k)
        if i < self._keys.size and self._keys[i] == k:
            return complex(self._c[i])
        return 0j

    def support(self) -> frozenset[int]:
        mask = int(np.bitwise_or.reduce(self._x | self._z)) if len(self) else 0
        return frozenset(i for i in range(self.n_sites) if (mask >> i) & 1)

    def key_array(self) -> np.ndarray:
        """Canonical word keys (read-only view)."""
        v = self._keys.view()
        v.flags.writeable = False
        return v

    def coefficient_array(self) -> np.ndarray:
        v = self._c.view()
        v.flags.writeable = False
        return v

    def to_triples(self) -> list[tuple[str, float, float]]:
        return [(w.letters, c.real, c.imag) for w, c in self.items()]

    def to_vector(self) -> np.ndarray:
        vec = np.zeros(4**self.n_sites, dtype=complex)
        vec[self._keys.astype(np.int64)] = self._c
        return vec

    def to_dense(self) -> np.ndarray:
        n = self.n_sites
        t = self.to_vector().reshape((4,) * n)
        for _ in range(n):
            t = np.tensordot(t, _PAULI, axes=([0], [0]))
        # axes are now (r0, c0, r1, c1, ...)
        order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
        return t.transpose(order).reshape(2**n, 2**n)

    def __len__(self):
        return int(self._c.size)

    def __bool__(self):
        return self._c.size > 0

    def __repr__(self):
        if not len(self):
            return f"OperatorSum({self.n_sites}, 0)"
        body = " + ".join(f"({c:.6g})*{w}" for w, c in self.items())
        return f"OperatorSum({body})"

    # -- comparisons --------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, OperatorSum):
            return NotImplemented
        return (
            self.n_sites == other.n_sites
            and np.array_equal(self._keys, other._keys)
            and np.array_equal(self._c, other._c)
        )

    __hash__ = None

    def isclose(self, other: "OperatorSum", atol: float = 1e-12) -> bool:
        _same_sites(self.n_sites, other.n_sites)
        diff = self - other
        return bool(np.all(np.abs(diff._c) <= atol))

    def is_hermitian(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self._c.imag) <= atol))

    def norm(self) -> float:
        """Trace norm sqrt(tr(A^dagger A) / 2^n)."""
        return float(np.linalg.norm(self._c))

    def max_abs_coefficient(self) -> float:
        return float(np.max(np.abs(self._c))) if len(self) else 0.0

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "OperatorSum":
        if isinstance(other, OperatorSum):
            _same_sites(self.n_sites, other.n_sites)
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return OperatorSum.identity(self.n_sites, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return OperatorSum._from_arrays(
            self.n_sites,
            np.concatenate([self._x, other._x]),
            np.concatenate([self._z, other._z]),
            np.concatenate([self._c, other._c]),
        )

    __radd__ = __add__

    def __neg__(self):
        return OperatorSum._from_arrays(self.n_sites, self._x, self._z, -self._c)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return OperatorSum._from_arrays(self.n_sites, self._x, self._z, self._c * other)
        if isinstance(other, OperatorSum):
            return _product(self, other, mode="plain")
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * (1.0 / other)
        return NotImplemented

    def dagger(self) -> "OperatorSum":
        return OperatorSum._from_arrays(self.n_sites, self._x, self._z, self._c.conj())

    def permute_sites(self, perm) -> "OperatorSum":
        """Relabel sites: the letter on site ``i`` moves to site ``perm[i]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.n_sites)):
            raise ValidationError(f"{perm} is not a permutation of {self.n_sites} sites")
        x = np.zeros_like(self._x)
        z = np.zeros_like(self._z)
        one = np.uint64(1)
        for i, j in enumerate(perm):
            x |= ((self._x >> np.uint64(i)) & one) << np.uint64(j)
            z |= ((self._z >> np.uint64(i)) & one) << np.uint64(j)
        return OperatorSum._from_arrays(self.n_sites, x, z, self._c)


def _product(a: OperatorSum, b: OperatorSum, mode: str) -> OperatorSum:
    _same_sites(a.n_sites, b.n_sites)
    n = a.n_sites
    if not len(a) or not len(b):
        return OperatorSum.zero(n)
    x1, z1 = a._x[:, None], a._z[:, None]
    x2, z2 = b._x[None, :], b._z[None, :]
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    e = (
        _popcount(x1 & z1)
        + _popcount(x2 & z2)
        - _popcount(x3 & z3)
        + 2 * _popcount(z1 & x2)
    ) & 3
    c = a._c[:, None] * b._c[None, :] * _IPOW[e]
    if mode != "plain":
        anti = (_popcount(x1 & z2) + _popcount(z1 & x2)) & 1
        # [u,v] = 2uv when u,v anticommute, {u,v} = 2uv when they commute
        keep = anti == 1 if mode == "comm" else anti == 0
        c = np.where(keep, 2.0 * c, 0.0)
    return OperatorSum._from_arrays(n, x3.ravel(), z3.ravel(), c.ravel())


def commutator(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    """[a, b] = ab - ba."""
    return _product(a, b, mode="comm")


def anticommutator(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    """{a, b} = ab + ba."""
    return _product(a, b, mode="anti")


def adjoint_superoperator(H: OperatorSum):
    """Sparse matrix of X -> [X, H] on length-4^n coefficient vectors.

    Column k holds the coefficients of [w_k, H] where w_k is the word with
    canonical key k.  Working on dense vectors avoids coefficient pruning in
    iterative schemes that divide by small norms.
    """
    from scipy import sparse

    n = H.n_sites
    dim = 4**n
    keys = np.arange(dim, dtype=np.uint64)
    x1, z1 = _decode_keys(keys, n)
    rows, cols, vals = [], [], []
    for xh, zh, ch in zip(H._x, H._z, H._c):
        anti = (_popcount(x1 & zh) + _popcount(z1 & xh)) & 1
        sel = np.nonzero(anti)[0]
        xa, za = x1[sel], z1[sel]
        x3, z3 = xa ^ xh, za ^ zh
        e = (_popcount(xa & za) + _popcount(xh & zh) - _popcount(x3 & z3) + 2 * _popcount(za & xh)) & 3
        rows.append(_lex_keys(x3, z3, n).astype(np.int64))
        cols.append(sel)
        vals.append(2.0 * ch * _IPOW[e])
    if not rows:
        return sparse.csr_matrix((dim, dim), dtype=complex)
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def trace_inner_product(a: OperatorSum, b: OperatorSum) -> complex:
    """tr(a^dagger b) / 2^n; Pauli words are orthonormal under it."""
    _same_sites(a.n_sites, b.n_sites)
    _, ia, ib = np.intersect1d(a._keys, b._keys, assume_unique=True, return_indices=True)
    return complex(np.sum(a._c[ia].conj() * b._c[ib]))


def expand_operator(matrix) -> OperatorSum:
    """Expand a dense 2^n x 2^n matrix as sum_w tr(M w)/2^n * w."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    dim = m.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise ShapeError(f"dimension {dim} is not a power of two")
    t = m.reshape((2,) * (2 * n))
    order = [k for i in range(n) for k in (i, n + i)]
    t = t.transpose(order).reshape((4,) * n)
    # q[r*2 + c, a] = P_a[c, r] / 2
    q = _PAULI.transpose(2, 1, 0).reshape(4, 4) / 2.0
    for _ in range(n):
        t = np.tensordot(t, q, axes=([0], [0]))
    return OperatorSum.from_vector(n, t.ravel())


@dataclass(frozen=True)
class StructureConstants:
    """Sparse product, commutator and anticommutator tables over ``basis``.

    Keys are index triples ``(alpha, beta, gamma)`` into ``basis``.  Products
    landing on a word outside the basis are listed in ``closure`` as
    ``(alpha, beta, phase, word)`` instead of being dropped.
    """

    basis: tuple[PauliWord, ...]
    product: dict
    commutator: dict
    anticommutator: dict
    closure: tuple

    @property
    def closed(self) -> bool:
        return not self.closure


def structure_constants(basis: Iterable) -> StructureConstants:
    words = tuple(_as_word(w) for w in basis)
    if not words:
        raise ValidationError("empty basis")
    n = words[0].n_sites
    for w in words:
        _same_sites(n, w.n_sites)
    if len(set(words)) != len(words):
        seen, dup = set(), []
        for w in words:
            if w in seen:
                dup.append(str(w))
            seen.add(w)
        raise ValidationError(f"duplicate basis words: {', '.join(dup)}")
    index = {w: k for k, w in enumerate(words)}
    a: dict = {}
    closure = []
    for i, u in enumerate(words):
        for j, v in enumerate(words):
            phase, w = word_product(u, v)
            k = index.get(w)
            if k is None:
                closure.append((i, j, phase, w))
            else:
                a[(i, j, k)] = phase
    b: dict = {}
    f: dict = {}
    for (i, j, k), val in a.items():
        other = a.get((j, i, k), 0j)
        comm = val - other
        anti = val + other
        if comm != 0:
            b[(i, j, k)] = comm
        if anti != 0:
            f[(i, j, k)] = anti
    return StructureConstants(words, a, b, f, tuple(closure))


# -- spin-1/2 helpers --------------------------------------------------------

def spin(n_sites: int, site: int, component: str) -> OperatorSum:
    """Spin operator s^component on ``site``; component in x, y, z, +, -.

    s^a = word/2 and s^+- = s^x +- i s^y.
    """
    c = component.lower()
    if c in ("x", "y", "z"):
        return OperatorSum.from_word(PauliWord.single(n_sites, site, c.upper()), 0.5)
    if c in ("+", "p", "-", "m"):
        sign = 1.0 if c in ("+", "p") else -1.0
        return spin(n_sites, site, "x") + sign * 1j * spin(n_sites, site, "y")
    raise ValidationError(f"unknown spin component {component!r}")


def levi_civita(a: int, b: int, c: int) -> int:
    return (a - b) * (b - c) * (c - a) // 2
