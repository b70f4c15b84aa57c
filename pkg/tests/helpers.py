"""Shared random generators and dense reference routines for the tests."""
import itertools

import numpy as np

from adtkit.algebra import OperatorSum, PauliWord

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_word(letters):
    out = np.eye(1, dtype=complex)
    for ch in letters:
        out = np.kron(out, PAULI[ch])
    return out


def random_word(rng, n):
    return PauliWord.from_string("".join(rng.choice(list("IXYZ"), n)))


def random_operator(rng, n, n_terms=4, hermitian=False):
    terms = {}
    for _ in range(n_terms):
        w = random_word(rng, n)
        c = rng.normal()
        if not hermitian:
            c = c + 1j * rng.normal()
        terms[w] = terms.get(w, 0) + c
    return OperatorSum(n, terms)


def random_hermitian_matrix(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (m + m.conj().T) / 2


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def random_hamiltonian(rng, n, n_terms=6):
    """Hermitian OperatorSum with random real coefficients on random words."""
    H = random_operator(rng, n, n_terms, hermitian=True)
    while not len(H):
        H = random_operator(rng, n, n_terms, hermitian=True)
    return H


def dense_spin(n, site, comp):
    s = {"x": PAULI["X"] / 2, "y": PAULI["Y"] / 2, "z": PAULI["Z"] / 2,
         "+": (PAULI["X"] + 1j * PAULI["Y"]) / 2, "-": (PAULI["X"] - 1j * PAULI["Y"]) / 2}[comp]
    out = np.eye(1, dtype=complex)
    for k in range(n):
        out = np.kron(out, s if k == site else np.eye(2))
    return out


def all_words(n):
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n)]
