"""First-order response of <s^x_a> to a transverse field on the two-spin bond.

Both engine routes use the static-response identity for the minus kind:
Q[G] = sum_{p != 0} r_p / |p|, and for a ground state the perturbation h B
shifts <A> by -h Q[G(A; B)] at first order.

naive
    Unperturbed H0 = Jz s^z_a s^z_b + hz (s^z_a + s^z_b).  The chain starts
    from G(s^y_a; s^y_a), whose inhomogeneity is split by the expectation
    value feeding each row.  The identity-word row is state independent and is
    excluded; the remaining channels give 4 hx hz <s^z_a> / (Jz^2 - 4 hz^2)
    for states in the S^z_total = 0 doublet.

hierarchy
    H0 = Jz s^z_a s^z_b.  The many-body channel G(s^z_a s^y_b; s^y_a s^z_b)
    lives on the two-dimensional closure {ZY, IX} with poles at +-Jz/2 and gives
    -4 hx Q = -4 hx <s^y_a s^y_b> / Jz for the doublet states.

exact
    Central difference of the ground-state <s^x_a> of the full bond.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .algebra import spin
from .cobs import StateSpec
from .errors import SingularError, ValidationError
from .models import build_qsm_bond
from .oracle import exact_diagonalize
from .sdeom import assemble, delta_channels, equal_time_response, greens_from_delta

AGREEMENT_TOL = 1e-10
DEFAULT_PROBE = 1e-3


@dataclass(frozen=True)
class Channel:
    """One parental channel: d * <u> = contribution."""

    label: str
    expectation: float
    coefficient: float | None
    contribution: float
    status: str = "computed"


@dataclass(frozen=True)
class ResponseResult:
    channel: str
    value: float
    inputs: dict
    parental: tuple = ()
    engine_value: float | None = None  # SDEOM route; compared with closed_form
    closed_form: float | None = None
    slope: float | None = None
    valid: bool = True
    singular: bool = False
    note: str = ""

    @property
    def agrees(self) -> bool | None:
        if self.engine_value is None or self.closed_form is None:
            return None
        return abs(self.engine_value - self.closed_form) <= AGREEMENT_TOL * max(1.0, abs(self.closed_form))


def _check_two_site(state: StateSpec):
    if state.n_sites != 2:
        raise ValidationError(f"the bond response needs a two-site state, got {state.n_sites} sites")


def _channels(sys, state, hx, scale, skip=()):
    """Per-word contributions scale * hx * Q[G^(w)] and their coefficients."""
    out, total = [], 0.0
    for word, delta in delta_channels(sys, state, "minus").items():
        if not np.any(np.abs(delta) > 1e-15):
            continue
        ev = 1.0 if word == "disconnected" else state.value(word)
        if word in skip:
            out.append(Channel(word, ev, None, 0.0, "excluded: state independent"))
            continue
        q = equal_time_response(greens_from_delta(sys, delta, "minus"))
        contrib = float((scale * hx * q).real)
        coef = contrib / ev if ev else None
        out.append(Channel(word, ev, coef, contrib))
        total += contrib
    return tuple(out), total


def naive_response(hx: float, hz: float, Jz: float, state: StateSpec) -> ResponseResult:
    """Single-particle channel, 4 hx hz <s^z_a> / (Jz^2 - 4 hz^2)."""
    _check_two_site(state)
    hx, hz, Jz = float(hx), float(hz), float(Jz)
    denom = Jz * Jz - 4 * hz * hz
    if math.isclose(abs(hz), abs(Jz) / 2, rel_tol=0, abs_tol=1e-12):
        raise SingularError(f"|hz| = Jz/2 = {abs(Jz) / 2}: level crossing makes the naive channel singular")
    sz = state.value("ZI") / 2
    closed = 4 * hx * hz * sz / denom
    H0 = build_qsm_bond(Jz, hz, 0.0)
    sy = spin(2, 0, "y")
    sys = assemble(sy, sy, H0, state, kind="minus")
    parental, engine = _channels(sys, state, hx, 1.0, skip=("II",))
    valid = abs(hz) < abs(Jz) / 2
    note = "" if valid else "|hz| > Jz/2: the unperturbed ground state is no longer the antiparallel doublet"
    return ResponseResult(
        "naive", closed, {"hx": hx, "hz": hz, "Jz": Jz, "sz_a": sz, "state": state.label},
        parental, engine, closed, None, valid, False, note,
    )


def hierarchy_response(hx: float, Jz: float, state: StateSpec) -> ResponseResult:
    """Many-body channel through the SDEOM, closed form -4 hx <s^y_a s^y_b> / Jz."""
    _check_two_site(state)
    hx, Jz = float(hx), float(Jz)
    if Jz == 0:
        raise SingularError("Jz = 0: the hierarchy channel has no energy denominator")
    syy = state.value("YY") / 4
    closed = -4 * hx * syy / Jz
    H0 = build_qsm_bond(Jz, 0.0, 0.0)
    O_i = spin(2, 0, "z") * spin(2, 1, "y")
    O_f = spin(2, 0, "y") * spin(2, 1, "z")
    sys = assemble(O_i, O_f, H0, state, kind="minus")
    parental, _ = _channels(sys, state, hx, -4.0)
    engine = float((-4 * hx * equal_time_response(greens_from_delta(sys, sys.delta_minus, "minus"))).real)
    return ResponseResult(
        "hierarchy", engine, {"hx": hx, "Jz": Jz, "syy": syy, "state": state.label},
        parental, engine, closed,
    )


def _ground_sx(Jz, hz, hx):
    spec = exact_diagonalize(build_qsm_bond(Jz, hz, hx))
    if spec.eigenvalues[1] - spec.eigenvalues[0] < 1e-12:
        raise ValidationError(f"ground state is degenerate at hx={hx}; enlarge the probe field")
    psi = spec.state(0)
    return float(np.vdot(psi, spin(2, 0, "x").to_dense() @ psi).real)


def exact_response_slope(hz: float, Jz: float, hx_probe: float | None = None,
                         hx: float | None = None) -> ResponseResult:
    """d<s^x_a>/dhx from ED at +-hx_probe; ``value`` is slope * hx."""
    hz, Jz = float(hz), float(Jz)
    if hx_probe is None:
        hx_probe = DEFAULT_PROBE * abs(Jz)
    if hx_probe <= 0:
        raise ValidationError("hx_probe must be positive")
    if hx is None:
        hx = hx_probe
    slope = (_ground_sx(Jz, hz, hx_probe) - _ground_sx(Jz, hz, -hx_probe)) / (2 * hx_probe)
    return ResponseResult(
        "exact", slope * hx, {"hx": float(hx), "hz": hz, "Jz": Jz, "hx_probe": float(hx_probe)},
        (Channel("ground state of the full bond", 1.0, slope, slope * hx),), slope=slope,
    )


@dataclass(frozen=True)
class ResponseReport:
    results: tuple

    def to_text(self) -> str:
        exact = next((r for r in self.results if r.channel == "exact"), None)
        head = f"{'channel':<10} {'value':>24} {'value/exact':>14} {'flags':<22} parental channels"
        lines = [head, "-" * len(head)]
        for r in self.results:
            ratio = ""
            if exact is not None and exact.value and not r.singular:
                ratio = f"{r.value / exact.value + 0.0:.6g}"
            flags = _flags(r)
            par = "; ".join(
                f"{c.label}: {c.contribution + 0.0:.6g}" if c.status == "computed" else f"{c.label}: {c.status}"
                for c in r.parental
            ) or "none"
            val = "singular" if r.singular else _num(r.value)
            lines.append(f"{r.channel:<10} {val:>24} {ratio:>14} {flags:<22} {par}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["channel", "value", "engine_value", "closed_form", "slope", "valid", "singular", "parental"])
        for r in self.results:
            w.writerow([
                r.channel,
                "" if r.singular else _num(r.value),
                "" if r.engine_value is None else _num(r.engine_value),
                "" if r.closed_form is None else _num(r.closed_form),
                "" if r.slope is None else _num(r.slope),
                str(r.valid).lower(),
                str(r.singular).lower(),
                " ".join(c.label for c in r.parental if c.status == "computed"),
            ])
        return buf.getvalue()


def _num(x: float) -> str:
    # adding 0.0 turns -0.0 into 0.0
    return f"{x + 0.0:.17g}"


def _flags(r: ResponseResult) -> str:
    out = []
    if r.singular:
        out.append("singular")
    if not r.valid:
        out.append("outside-validity")
    if r.agrees is False:
        out.append("engine!=closed")
    return ",".join(out) or "ok"


def response_report(results) -> ResponseReport:
    results = tuple(results)
    if not results:
        raise ValidationError("response_report needs at least one result")
    return ResponseReport(results)


def perturbation_triple(hx: float, hz: float, Jz: float, state: StateSpec,
                        hx_probe: float | None = None) -> ResponseReport:
    """Naive, hierarchy and exact results side by side.

    A singular naive channel becomes a flagged row instead of an error.
    """
    try:
        naive = naive_response(hx, hz, Jz, state)
    except SingularError as exc:
        naive = ResponseResult("naive", math.nan, {"hx": hx, "hz": hz, "Jz": Jz}, valid=False,
                               singular=True, note=str(exc))
    rows = [naive, hierarchy_response(hx, Jz, state), exact_response_slope(hz, Jz, hx_probe, hx)]
    return response_report(rows)
