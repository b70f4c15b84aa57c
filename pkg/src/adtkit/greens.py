"""Two-time Green's functions stored as pole/residue lists.

Kinds follow the bracket in the equal-time limit: ``plus`` carries the
commutator <[A, B]> and ``minus`` the connected anticommutator
<{A, B}> - 2<A><B>.  A Green's function is

    G(omega) = sum_p r_p / (omega - p) + static / omega,

where ``static`` collects zero-frequency weight that the Lehmann oracle
classifies as static and keeps out of the pole list.  The time-domain
companion is g(t) = sum_p r_p exp(-i p t), so g(0) is the residue sum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PoleProximityError, ValidationError

KINDS = ("plus", "minus")
POLE_PROXIMITY = 1e-9


def check_kind(kind: str) -> str:
    if kind not in KINDS:
        raise ValidationError(f"kind must be 'plus' or 'minus', got {kind!r}")
    return kind


@dataclass(frozen=True)
class GreensFunction:
    poles: np.ndarray
    residues: np.ndarray
    kind: str = "plus"
    static_residue: complex = 0j
    label: str = ""

    def __post_init__(self):
        check_kind(self.kind)
        poles = np.asarray(self.poles, dtype=float).ravel()
        res = np.asarray(self.residues, dtype=complex).ravel()
        if poles.shape != res.shape:
            raise ValidationError("poles and residues must have equal length")
        order = np.argsort(poles, kind="stable")
        object.__setattr__(self, "poles", poles[order])
        object.__setattr__(self, "residues", res[order])
        object.__setattr__(self, "static_residue", complex(self.static_residue))

    def __len__(self):
        return self.poles.size

    def nearest_pole(self, omega: complex) -> tuple[float, float]:
        """(pole, distance) of the pole closest to ``omega``."""
        if not self.poles.size:
            return (np.nan, np.inf)
        d = np.abs(omega - self.poles)
        k = int(np.argmin(d))
        return float(self.poles[k]), float(d[k])

    def __call__(self, omega, eta: float = 0.0):
        """Evaluate at real or complex frequencies; ``eta`` adds +i eta."""
        if eta < 0:
            raise ValidationError("broadening eta must be non-negative")
        w = np.asarray(omega, dtype=complex) + 1j * eta
        flat = w.ravel()
        if self.poles.size:
            dist = np.abs(flat[:, None] - self.poles[None, :])
            bad = np.argwhere(dist < POLE_PROXIMITY)
            if bad.size:
                i, j = bad[0]
                raise PoleProximityError(complex(flat[i]), float(self.poles[j]))
            out = (self.residues[None, :] / (flat[:, None] - self.poles[None, :])).sum(axis=1)
        else:
            out = np.zeros(flat.shape, dtype=complex)
        if self.static_residue != 0:
            if np.any(np.abs(flat) < POLE_PROXIMITY):
                raise PoleProximityError(0j, 0.0)
            out = out + self.static_residue / flat
        out = out.reshape(w.shape)
        return complex(out) if out.ndim == 0 else out

    def time_series(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        phases = np.exp(-1j * np.multiply.outer(t, self.poles))
        return phases @ self.residues + self.static_residue

    def residue_sum(self) -> complex:
        return complex(self.residues.sum() + self.static_residue)

    def pole_table(self) -> list[tuple[float, float, float]]:
        return [(float(p), float(r.real), float(r.imag)) for p, r in zip(self.poles, self.residues)]

    def dropping(self, atol: float) -> "GreensFunction":
        """Copy without poles whose residue magnitude is at most ``atol``."""
        keep = np.abs(self.residues) > atol
        return GreensFunction(self.poles[keep], self.residues[keep], self.kind, self.static_residue, self.label)


def merge_poles(poles, residues, tol: float = POLE_PROXIMITY, drop: float = 0.0):
    """Sum residues of poles closer than ``tol``; drop merged residues <= ``drop``."""
    poles = np.asarray(poles, dtype=float)
    residues = np.asarray(residues, dtype=complex)
    if not poles.size:
        return poles, residues
    order = np.argsort(poles, kind="stable")
    poles, residues = poles[order], residues[order]
    out_p, out_r = [], []
    start = 0
    for k in range(1, poles.size + 1):
        if k == poles.size or poles[k] - poles[start] > tol:
            w = residues[start:k]
            # merged clusters sit at their mean position
            out_p.append(float(poles[start:k].mean()))
            out_r.append(complex(w.sum()))
            start = k
    p, r = np.array(out_p), np.array(out_r, dtype=complex)
    keep = np.abs(r) > drop
    return p[keep], r[keep]
