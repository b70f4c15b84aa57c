"""Dense exact-diagonalization oracle.

Lehmann form for a state |psi> inside an eigenspace of energy E, with
A = O_i, B = O_f and Omega_m = e_m - E:

    plus:   G = sum_m A_pm B_mp / (w - Omega_m) - sum_m B_pm A_mp / (w + Omega_m)
    minus:  G = sum_m A_pm B_mp / (w - Omega_m) + sum_m B_pm A_mp / (w + Omega_m)
                - 2 <A><B> / w

Terms with m inside the degenerate eigenspace sit at zero frequency.  They are
reported as ``static_residue`` and kept out of the pole list; for the minus
kind the state's own <A><B> pieces cancel against the subtraction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import OperatorSum
from .errors import ResourceError, ShapeError, ValidationError
from .greens import POLE_PROXIMITY, GreensFunction, check_kind, merge_poles

DEFAULT_SITE_CAP = 6
DEGENERACY_TOL = 1e-9
EIGENSTATE_TOL = 1e-8
RESIDUE_DROP = 1e-13


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    groups: tuple
    hamiltonian: np.ndarray
    n_sites: int
    degeneracy_tol: float = DEGENERACY_TOL

    @property
    def dimension(self) -> int:
        return self.eigenvalues.size

    def bohr_frequencies(self) -> np.ndarray:
        e = self.eigenvalues
        return np.unique(np.round((e[:, None] - e[None, :]).ravel(), 12))

    def state(self, index: int) -> np.ndarray:
        return self.eigenvectors[:, index].copy()

    def group_of(self, energy: float) -> np.ndarray:
        for g in self.groups:
            if abs(self.eigenvalues[g[0]] - energy) < self.degeneracy_tol:
                return g
        raise ValidationError(f"energy {energy} is not in the spectrum")


def _groups(evals: np.ndarray, tol: float) -> tuple:
    groups, start = [], 0
    for k in range(1, evals.size + 1):
        if k == evals.size or evals[k] - evals[start] >= tol:
            groups.append(np.arange(start, k))
            start = k
    return tuple(groups)


def exact_diagonalize(H, site_cap: int = DEFAULT_SITE_CAP,
                      degeneracy_tol: float = DEGENERACY_TOL) -> SpectralData:
    """Full Hermitian eigendecomposition of an OperatorSum or dense matrix."""
    if isinstance(H, OperatorSum):
        n = H.n_sites
        if n > site_cap:
            raise ResourceError(f"{n} site-flavors exceed the dense cap of {site_cap}")
        if not H.is_hermitian(atol=1e-12):
            raise ValidationError("Hamiltonian must be Hermitian")
        Hd = H.to_dense()
    else:
        Hd = np.asarray(H, dtype=complex)
        if Hd.ndim != 2 or Hd.shape[0] != Hd.shape[1]:
            raise ShapeError(f"expected a square matrix, got {Hd.shape}")
        n = Hd.shape[0].bit_length() - 1
        if n > site_cap:
            raise ResourceError(f"{n} site-flavors exceed the dense cap of {site_cap}")
        if not np.allclose(Hd, Hd.conj().T, atol=1e-12):
            raise ValidationError("Hamiltonian must be Hermitian")
    evals, evecs = np.linalg.eigh(Hd)
    recon = evecs @ np.diag(evals) @ evecs.conj().T
    err = np.abs(recon - Hd).max()
    if err > 1e-10:
        raise ValidationError(f"eigendecomposition reconstruction error {err:.2e}")
    return SpectralData(evals, evecs, _groups(evals, degeneracy_tol), Hd, n, degeneracy_tol)


def _dense(op, dim: int) -> np.ndarray:
    m = op.to_dense() if isinstance(op, OperatorSum) else np.asarray(op, dtype=complex)
    if m.shape != (dim, dim):
        raise ShapeError(f"operator shape {m.shape} does not match dimension {dim}")
    return m


def check_eigenstate(spec: SpectralData, psi) -> tuple[np.ndarray, float]:
    """Normalized state and its energy; raises if it is not stationary."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.size != spec.dimension:
        raise ShapeError(f"state has length {psi.size}, expected {spec.dimension}")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1) > 1e-10:
        raise ValidationError(f"state norm {nrm} is not 1")
    Hpsi = spec.hamiltonian @ psi
    E = float(np.vdot(psi, Hpsi).real)
    res = np.linalg.norm(Hpsi - E * psi)
    if res > EIGENSTATE_TOL:
        raise ValidationError(
            f"state is not an eigenvector of H (residual {res:.2e}); the stationary formalism needs one"
        )
    return psi, E


def lehmann_greens(spec: SpectralData, state, O_i, O_f, kind: str = "plus") -> GreensFunction:
    """Exact pole/residue form of G[O_i; O_f] in an eigenstate."""
    check_kind(kind)
    psi, E = check_eigenstate(spec, state)
    V = spec.eigenvectors
    A = _dense(O_i, spec.dimension)
    B = _dense(O_f, spec.dimension)
    # matrix elements between psi and eigenvectors m
    A_pm = (psi.conj() @ A) @ V
    B_mp = V.conj().T @ (B @ psi)
    B_pm = (psi.conj() @ B) @ V
    A_mp = V.conj().T @ (A @ psi)
    omega = spec.eigenvalues - E
    sign = -1.0 if kind == "plus" else 1.0
    deg = np.abs(omega) < spec.degeneracy_tol
    fwd = A_pm * B_mp
    bwd = B_pm * A_mp
    static = complex(fwd[deg].sum() + sign * bwd[deg].sum())
    if kind == "minus":
        static -= 2 * np.vdot(psi, A @ psi) * np.vdot(psi, B @ psi)
    poles = np.concatenate([omega[~deg], -omega[~deg]])
    residues = np.concatenate([fwd[~deg], sign * bwd[~deg]])
    scale = max(1.0, np.abs(A).max() * np.abs(B).max())
    poles, residues = merge_poles(poles, residues, drop=RESIDUE_DROP * scale)
    if abs(static) < RESIDUE_DROP * scale:
        static = 0j
    return GreensFunction(poles, residues, kind, static, label=f"lehmann-{kind}")


def time_evolve_expectation(spec: SpectralData, state, O, times) -> np.ndarray:
    """<psi(t)| O |psi(t)> with psi(t) = exp(-iHt) psi."""
    psi = np.asarray(state, dtype=complex).ravel()
    if psi.size != spec.dimension:
        raise ShapeError(f"state has length {psi.size}, expected {spec.dimension}")
    Od = _dense(O, spec.dimension)
    V = spec.eigenvectors
    c = V.conj().T @ psi
    Ot = V.conj().T @ Od @ V
    t = np.asarray(times, dtype=float).ravel()
    ph = np.exp(-1j * np.outer(t, spec.eigenvalues)) * c[None, :]
    return np.einsum("ti,ij,tj->t", ph.conj(), Ot, ph)


@dataclass(frozen=True)
class Comparison:
    max_deviation: float
    worst_omega: complex
    pairs: tuple
    unmatched: tuple
    static_difference: complex
    tolerance: float
    passed: bool

    def to_text(self, names=("a", "b")) -> str:
        na, nb = names
        lines = [
            "Green's function comparison",
            f"  {na} vs {nb}",
            "",
            f"  {'pole':>24}  {'residue ' + na:>44}  {'residue ' + nb:>44}",
        ]
        for p, ra, rb in self.pairs:
            lines.append(
                f"  {p:24.17g}  {ra.real:21.14g}{ra.imag:+21.14g}i  {rb.real:21.14g}{rb.imag:+21.14g}i"
            )
        for src, p, r in self.unmatched:
            lines.append(f"  unmatched pole in {src}: {p:.17g} residue {r.real:.14g}{r.imag:+.14g}i")
        if self.static_difference != 0:
            d = self.static_difference
            lines.append(f"  static (zero-frequency) weight differs by {d.real:.14g}{d.imag:+.14g}i")
        lines += [
            "",
            f"  max deviation: {self.max_deviation:.6e} at omega = {self.worst_omega}",
            f"  tolerance: {self.tolerance:.1e}",
            f"  verdict: {'PASS' if self.passed else 'FAIL'}",
        ]
        return "\n".join(lines) + "\n"


def compare_greens(a: GreensFunction, b: GreensFunction, grid, tolerance: float = 1e-8,
                   margin: float = 0.05, pair_tol: float = POLE_PROXIMITY) -> Comparison:
    """Max |a - b| on a grid kept ``margin`` away from both pole sets."""
    grid = np.asarray(grid, dtype=complex).ravel()
    if grid.size == 0:
        raise ValidationError("comparison grid is empty")
    for gf in (a, b):
        poles = list(gf.poles) + ([0.0] if gf.static_residue != 0 else [])
        for p in poles:
            d = np.abs(grid - p)
            if d.min() < margin:
                raise ValidationError(
                    f"grid point {grid[np.argmin(d)]} is within the margin {margin} of pole {p}"
                )
    dev = np.abs(a(grid) - b(grid))
    k = int(np.argmax(dev))
    pairs, unmatched = [], []
    used = set()
    for p, r in zip(a.poles, a.residues):
        d = np.abs(b.poles - p)
        j = int(np.argmin(d)) if d.size else -1
        if j >= 0 and d[j] <= pair_tol and j not in used:
            used.add(j)
            pairs.append((float(p), complex(r), complex(b.residues[j])))
        else:
            unmatched.append(("a", float(p), complex(r)))
    for j, (p, r) in enumerate(zip(b.poles, b.residues)):
        if j not in used:
            unmatched.append(("b", float(p), complex(r)))
    static = a.static_residue - b.static_residue
    passed = bool(dev[k] <= tolerance) and all(abs(r) <= tolerance for _, _, r in unmatched)
    passed = passed and abs(static) <= tolerance
    return Comparison(float(dev[k]), complex(grid[k]), tuple(pairs), tuple(unmatched), static, tolerance, passed)
