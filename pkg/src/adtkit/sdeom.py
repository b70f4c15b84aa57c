"""Schwinger-Dyson equations of motion on a closed operator subspace.

Conventions (hbar = 1): O(t) = exp(iHt) O exp(-iHt), so i dO/dt = [O, H].
The Krylov closure of the initial operator O_i is orthonormalized in the trace
inner product, giving a basis {e_k} with

    [e_k, H] = sum_j M_jk e_j,        M_jk = <e_j, [e_k, H]>.

M is Hermitian whenever H is.  The Liouvillian is stored as L = M^T (same
spectrum) so that, with a_k = <e_k, O_i>,

    G(omega) = a^T (omega - L)^{-1} Delta,
    Delta_k  = <[e_k, O_f]>                        (plus kind)
    Delta_k  = <{e_k, O_f}> - 2 <e_k> <O_f>          (minus kind).

Expanding in 1/omega gives a^T L^n Delta = <[ad^n O_i, O_f]_-+>, the moments
of the Lehmann representation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    OperatorSum,
    adjoint_superoperator,
    anticommutator,
    commutator,
    trace_inner_product,
)
from .cobs import GradedBasis, StateSpec, enumerate_cobs
from .errors import (
    AdtError,
    DimensionError,
    MissingDataError,
    PoleProximityError,
    ResourceError,
    SingularError,
    ValidationError,
)
from .greens import POLE_PROXIMITY, GreensFunction, check_kind, merge_poles

KRYLOV_TOL = 1e-12
PIVOT_TOL = 1e-12
RESIDUE_DROP = 1e-13
MAX_MOMENTS = 12
HERMITIAN_TOL = 1e-12


def adjoint_action(O: OperatorSum, H: OperatorSum) -> OperatorSum:
    """[O, H], the generator of i dO/dt."""
    if O.n_sites != H.n_sites:
        raise DimensionError(f"operator acts on {O.n_sites} sites, Hamiltonian on {H.n_sites}")
    if not H.is_hermitian(atol=HERMITIAN_TOL):
        raise ValidationError("Hamiltonian must be Hermitian (all word coefficients real)")
    return commutator(O, H)


def _orthogonalize(v: OperatorSum, basis) -> OperatorSum:
    # two passes of modified Gram-Schmidt
    for _ in range(2):
        for e in basis:
            c = trace_inner_product(e, v)
            if c != 0:
                v = v - c * e
    return v


def _krylov_vectors(O0: OperatorSum, H: OperatorSum, cap: int | None, tol: float):
    """Dense orthonormal Krylov vectors (columns) and the adjoint superoperator."""
    if O0.n_sites != H.n_sites:
        raise DimensionError(f"operator acts on {O0.n_sites} sites, Hamiltonian on {H.n_sites}")
    if not H.is_hermitian(atol=HERMITIAN_TOL):
        raise ValidationError("Hamiltonian must be Hermitian (all word coefficients real)")
    n = O0.n_sites
    if cap is None:
        cap = 4**n
    if cap < 1:
        raise ValidationError(f"cap must be at least 1, got {cap}")
    norm = O0.norm()
    if norm == 0:
        raise ValidationError("initial operator is zero")
    A = adjoint_superoperator(H)
    cols = [O0.to_vector() / norm]
    B = np.empty((4**n, 0), dtype=complex)
    while True:
        B = np.column_stack(cols)
        image = A @ cols[-1]
        v = image.copy()
        # classical Gram-Schmidt applied twice is enough for full reorthogonalization
        for _ in range(2):
            v -= B @ (B.conj().T @ v)
        r = np.linalg.norm(v)
        if r < tol * max(1.0, np.linalg.norm(image)):
            return B, A
        if len(cols) >= cap:
            raise ResourceError(f"Krylov closure exceeded cap {cap} with residual norm {r:.3e}")
        cols.append(v / r)


def krylov_closure(O0: OperatorSum, H: OperatorSum, cap: int | None = None,
                   tol: float = KRYLOV_TOL) -> list[OperatorSum]:
    """Orthonormal basis of span{O0, [O0,H], [[O0,H],H], ...}.

    Iteration stops when the orthogonalized image of the newest vector has norm
    below ``tol`` relative to max(1, |image|).  ``cap`` defaults to 4^N.
    """
    B, _ = _krylov_vectors(O0, H, cap, tol)
    return [OperatorSum.from_vector(O0.n_sites, B[:, k]) for k in range(B.shape[1])]


def liouvillian(basis, H: OperatorSum) -> np.ndarray:
    """L = M^T with M_jk = <e_j, [e_k, H]>."""
    d = len(basis)
    M = np.zeros((d, d), dtype=complex)
    for k, e in enumerate(basis):
        img = adjoint_action(e, H)
        for j, f in enumerate(basis):
            M[j, k] = trace_inner_product(f, img)
    return M.T.copy()


def closure_residual(basis, H: OperatorSum) -> float:
    """Largest norm of the part of [e_k, H] outside span(basis)."""
    worst = 0.0
    for e in basis:
        worst = max(worst, _orthogonalize(adjoint_action(e, H), basis).norm())
    return worst


@dataclass(frozen=True)
class SdeomSystem:
    """Assembled linear system for G[O_i; O_f] under H and a state."""

    initial_operator: OperatorSum
    final_operator: OperatorSum
    hamiltonian: OperatorSum
    basis: tuple
    L: np.ndarray
    a: np.ndarray
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    kind: str = "plus"
    relations: dict = field(default_factory=dict, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def delta(self, kind: str | None = None) -> np.ndarray:
        kind = check_kind(kind or self.kind)
        return self.delta_plus if kind == "plus" else self.delta_minus

    def eigen(self):
        """Eigenvalues and eigenvectors of the Hermitian L."""
        L = self.L
        if not np.allclose(L, L.conj().T, atol=1e-10, rtol=0):
            raise AdtError("Liouvillian is not Hermitian; is H Hermitian?")
        return np.linalg.eigh((L + L.conj().T) / 2)


def assemble(O_i: OperatorSum, O_f: OperatorSum, H: OperatorSum, state: StateSpec,
             kind: str = "plus", cap: int | None = None) -> SdeomSystem:
    """Build the SDEOM for G[O_i; O_f]; both Delta vectors are filled."""
    check_kind(kind)
    for name, op in (("O_i", O_i), ("O_f", O_f), ("H", H)):
        if op.n_sites != state.n_sites:
            raise DimensionError(f"{name} acts on {op.n_sites} sites, state on {state.n_sites}")
    B, A = _krylov_vectors(O_i, H, cap, KRYLOV_TOL)
    L = (B.conj().T @ (A @ B)).T
    a = B.conj().T @ O_i.to_vector()
    basis = [OperatorSum.from_vector(O_i.n_sites, B[:, k]) for k in range(B.shape[1])]
    missing = set()
    comms, antis = [], []
    for e in basis:
        comms.append(commutator(e, O_f))
        antis.append(anticommutator(e, O_f))
        missing.update(state.missing(comms[-1]))
        missing.update(state.missing(antis[-1]))
        missing.update(state.missing(e))
    missing.update(state.missing(O_f))
    if missing:
        raise MissingDataError(missing, context="SDEOM inhomogeneity")
    f_mean = state.expectation(O_f)
    d_plus = np.array([state.expectation(c) for c in comms])
    d_minus = np.array(
        [state.expectation(ac) - 2 * state.expectation(e) * f_mean for ac, e in zip(antis, basis)]
    )
    relations = {"plus": tuple(comms), "minus": tuple(antis)}
    return SdeomSystem(O_i, O_f, H, tuple(basis), L, a, d_plus, d_minus, kind, relations)


def assemble_conjugate(O_i, O_f, H, state, kind="plus", cap=None) -> SdeomSystem:
    """The hierarchy generated from the final-operator side: roles swapped."""
    return assemble(O_f, O_i, H, state, kind=kind, cap=cap)


def greens_from_delta(sys: SdeomSystem, delta: np.ndarray, kind: str = "plus",
                      label: str = "") -> GreensFunction:
    """Pole/residue form of a^T (omega - L)^{-1} delta."""
    lam, U = sys.eigen()
    left = sys.a @ U
    right = U.conj().T @ np.asarray(delta, dtype=complex)
    res = left * right
    scale = max(1.0, float(np.abs(sys.a).max(initial=0)) * float(np.abs(delta).max(initial=0)))
    poles, residues = merge_poles(lam, res, drop=RESIDUE_DROP * scale)
    return GreensFunction(poles, residues, kind, 0j, label)


def greens_function(sys: SdeomSystem, kind: str | None = None) -> GreensFunction:
    kind = check_kind(kind or sys.kind)
    return greens_from_delta(sys, sys.delta(kind), kind, label=f"sdeom-{kind}")


def sweep(sys: SdeomSystem, omega_grid, kind: str | None = None, eta: float = 0.0) -> np.ndarray:
    """Per-frequency linear solves of (omega - L) x = Delta."""
    kind = check_kind(kind or sys.kind)
    if eta < 0:
        raise ValidationError("broadening eta must be non-negative")
    omega = np.asarray(omega_grid, dtype=complex).ravel() + 1j * eta
    lam = np.linalg.eigvalsh((sys.L + sys.L.conj().T) / 2)
    for w in omega:
        d = np.abs(w - lam)
        k = int(np.argmin(d))
        if d[k] < POLE_PROXIMITY:
            raise PoleProximityError(complex(w), float(lam[k]))
    eye = np.eye(sys.dimension)
    delta = sys.delta(kind)
    return np.array([sys.a @ np.linalg.solve(w * eye - sys.L, delta) for w in omega])


def solve_frequency(sys: SdeomSystem, omega_grid=None, kind: str | None = None,
                    eta: float = 0.0, rtol: float = 1e-10) -> GreensFunction:
    """Green's function in pole form, cross-checked against per-point solves.

    Raises PoleProximityError when a grid point is within 1e-9 of an eigenvalue
    of L, and AdtError when the two routes disagree beyond ``rtol``.
    """
    kind = check_kind(kind or sys.kind)
    gf = greens_function(sys, kind)
    if omega_grid is not None and np.size(omega_grid):
        direct = sweep(sys, omega_grid, kind, eta)
        spectral = gf(np.asarray(omega_grid, dtype=complex).ravel(), eta=eta)
        dev = np.abs(direct - spectral)
        # near a pole both routes lose accuracy in proportion to 1/distance
        lam = np.linalg.eigvalsh((sys.L + sys.L.conj().T) / 2)
        w = np.asarray(omega_grid, dtype=complex).ravel() + 1j * eta
        dist = np.min(np.abs(w[:, None] - lam[None, :]), axis=1)
        tol = rtol * np.maximum(1.0, np.abs(direct)) * np.maximum(1.0, 1.0 / dist)
        if np.any(dev > tol):
            k = int(np.argmax(dev - tol))
            raise AdtError(
                f"linear-solve and pole routes disagree by {dev[k]:.3e} at omega={omega_grid[k]}"
            )
    return gf


# -- reports -------------------------------------------------------------------

def describe(op: OperatorSum, digits: int = 6) -> str:
    """Compact text form such as ``0.5 XI + 0.5i YI``."""
    if not len(op):
        return "0"
    parts = []
    for w, c in op.items():
        re, im = round(c.real, digits) + 0.0, round(c.imag, digits) + 0.0
        if im == 0:
            coef = f"{re:g}"
        elif re == 0:
            coef = f"{im:g}i"
        else:
            coef = f"({re:g}{im:+g}i)"
        parts.append(f"{coef} {w}")
    return " + ".join(parts).replace("+ -", "- ")


@dataclass(frozen=True)
class PivotalEntry:
    index: int
    operator: OperatorSum
    relation: OperatorSum
    delta: complex


@dataclass(frozen=True)
class PivotalReport:
    kind: str
    entries: tuple
    dimension: int

    @property
    def indices(self) -> list[int]:
        return [e.index for e in self.entries]

    def to_text(self) -> str:
        bracket = "[e_k, O_f]" if self.kind == "plus" else "{e_k, O_f}"
        lines = [
            f"pivotal channels ({self.kind}): {len(self.entries)} of {self.dimension}",
        ]
        if not self.entries:
            lines.append("  none: every inhomogeneity vanishes for this state")
        for e in self.entries:
            lines.append(f"  k={e.index}  Delta={e.delta.real + 0.0:.12g}{e.delta.imag + 0.0:+.12g}i")
            lines.append(f"    e_k = {describe(e.operator)}")
            lines.append(f"    {bracket} = {describe(e.relation)}")
        return "\n".join(lines) + "\n"


def pivotal_channels(sys: SdeomSystem, kind: str | None = None, tol: float = PIVOT_TOL) -> PivotalReport:
    """Rows whose inhomogeneity exceeds ``tol``, with their generating bracket."""
    kind = check_kind(kind or sys.kind)
    delta = sys.delta(kind)
    rel = sys.relations.get(kind, ())
    entries = tuple(
        PivotalEntry(k, sys.basis[k], rel[k] if rel else OperatorSum.zero(sys.hamiltonian.n_sites), complex(delta[k]))
        for k in range(sys.dimension)
        if abs(delta[k]) > tol
    )
    return PivotalReport(kind, entries, sys.dimension)


def delta_channels(sys: SdeomSystem, state: StateSpec, kind: str | None = None) -> dict[str, np.ndarray]:
    """Split Delta by the expectation value that feeds it.

    Each Pauli word w in the brackets contributes C_{k,w} <w>; the minus kind
    adds a ``disconnected`` channel -2 <e_k><O_f>.  The channels sum to Delta.
    """
    kind = check_kind(kind or sys.kind)
    rel = sys.relations[kind]
    out: dict[str, np.ndarray] = {}
    d = sys.dimension
    for k, op in enumerate(rel):
        for w, c in op.items():
            vec = out.setdefault(w.letters, np.zeros(d, dtype=complex))
            vec[k] += c * state.value(w)
    if kind == "minus":
        f_mean = state.expectation(sys.final_operator)
        out["disconnected"] = np.array([-2 * state.expectation(e) * f_mean for e in sys.basis])
    return dict(sorted(out.items()))


# -- eigenstate constraint and moments -------------------------------------------

@dataclass(frozen=True)
class ResidualReport:
    words: tuple
    residuals: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.residuals).max(initial=0.0))

    def nonzero(self, tol: float = 1e-12) -> dict[str, complex]:
        return {w.letters: complex(r) for w, r in zip(self.words, self.residuals) if abs(r) > tol}


def eigenstate_residual(state: StateSpec, H: OperatorSum, basis: GradedBasis | None = None) -> ResidualReport:
    """r_w = <[w, H]> for every word of ``basis``; zero for eigenstates."""
    if basis is None:
        basis = enumerate_cobs(state.n_sites, state.basis.max_grade)
    words = basis.words
    res = np.array([state.expectation(adjoint_action(OperatorSum.from_word(w), H)) for w in words])
    return ResidualReport(tuple(words), res)


def _nested(O: OperatorSum, H: OperatorSum, n_max: int):
    if n_max > MAX_MOMENTS:
        raise ResourceError(f"n_max={n_max} exceeds the nested-commutator cap {MAX_MOMENTS}")
    if n_max < 0:
        raise ValidationError("n_max must be non-negative")
    ops = [O]
    for _ in range(n_max):
        ops.append(adjoint_action(ops[-1], H))
    return ops


def moment_series(O: OperatorSum, H: OperatorSum, state: StateSpec, n_max: int) -> list[complex]:
    """m_n = <ad_H^n O>, so <O(t)> = sum_n m_n (-i t)^n / n!."""
    return [state.expectation(op) for op in _nested(O, H, n_max)]


def correlator_moments(O_i: OperatorSum, O_f: OperatorSum, H: OperatorSum, state: StateSpec,
                       n_max: int, kind: str = "plus") -> list[complex]:
    """<[ad^n O_i, O_f]> (plus) or <{ad^n O_i, O_f}> - 2<ad^n O_i><O_f> (minus).

    These are the Taylor coefficients of g(t) = sum_p r_p exp(-i p t) in
    powers of (-i t)^n / n!.
    """
    check_kind(kind)
    out = []
    f_mean = state.expectation(O_f)
    for op in _nested(O_i, H, n_max):
        if kind == "plus":
            out.append(state.expectation(commutator(op, O_f)))
        else:
            out.append(state.expectation(anticommutator(op, O_f)) - 2 * state.expectation(op) * f_mean)
    return out


def evaluate_series(moments, times) -> np.ndarray:
    """sum_n m_n (-i t)^n / n! at each time."""
    t = np.asarray(times, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    fact = 1.0
    for n, m in enumerate(moments):
        if n:
            fact *= n
        out = out + m * (-1j * t) ** n / fact
    return out


def equal_time_response(gf: GreensFunction, zero_tol: float = POLE_PROXIMITY,
                        residue_tol: float = 1e-12) -> complex:
    """Q = sum_p r_p / |p| over the dynamical poles.

    For the minus kind and a ground state, -h Q[G(A; B)] is the first-order
    shift of <A> under the perturbation h B.  Weight at zero frequency makes
    the static response singular.
    """
    zero = np.abs(gf.poles) < zero_tol
    if np.any(np.abs(gf.residues[zero]) > residue_tol) or abs(gf.static_residue) > residue_tol:
        raise SingularError("zero-frequency weight makes the static response singular")
    p, r = gf.poles[~zero], gf.residues[~zero]
    return complex(np.sum(r / np.abs(p)))
