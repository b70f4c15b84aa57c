"""Acceptance criteria, one test per criterion at the stated tolerances.

Each test gathers every sub-check before asserting, so a failure message lists
all the sub-checks that missed, not only the first.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import expm

from adtkit.algebra import (
    OperatorSum,
    PauliWord,
    anticommutator,
    commutator,
    expand_operator,
    spin,
    structure_constants,
    trace_inner_product,
    word_product,
)
from adtkit.cli import main
from adtkit.cobs import (
    basis_state,
    cumulant,
    density_matrix_from_expectations,
    enumerate_cobs,
    expectations_from_state,
    set_partitions,
    two_spin_state,
)
from adtkit.models import annihilator, creator, majorana, build_qsm_bond
from adtkit.oracle import exact_diagonalize, lehmann_greens
from adtkit.perturbation import exact_response_slope, hierarchy_response, naive_response
from adtkit.sdeom import assemble, eigenstate_residual, greens_function, krylov_closure, moment_series
from helpers import dense_word, random_hermitian_matrix, random_operator, random_state

ROOT = Path(__file__).resolve().parents[1]


class Checks:
    def __init__(self):
        self.failed = []

    def __call__(self, ok, label):
        if not ok:
            self.failed.append(label)

    def done(self):
        assert not self.failed, "failed sub-checks: " + "; ".join(self.failed)


def random_real_hamiltonian(rng, n):
    m = random_hermitian_matrix(rng, 2**n)
    return OperatorSum.from_vector(n, expand_operator(m).to_vector().real)


def random_sdeom_case(rng):
    n = int(rng.integers(2, 4))
    H = random_real_hamiltonian(rng, n)
    spec = exact_diagonalize(H)
    psi = spec.state(int(rng.integers(0, 2**n)))
    letters = lambda: "".join(rng.choice(list("IXYZ"), n))  # noqa: E731
    a = letters()
    while set(a) == {"I"}:
        a = letters()
    return H, spec, psi, OperatorSum.from_word(a), OperatorSum.from_word(letters())


@pytest.mark.criterion(1, "algebra suite: word products, trace orthonormality, Jacobi")
def test_criterion_01_algebra():
    chk = Checks()
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    phases = {1, -1, 1j, -1j}
    bad_phase = bad_dense = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 7))
        a = "".join(rng.choice(list("IXYZ"), n))
        b = "".join(rng.choice(list("IXYZ"), n))
        phase, w = word_product(PauliWord.from_string(a), PauliWord.from_string(b))
        bad_phase += phase not in phases
        bad_dense += not np.array_equal(dense_word(a) @ dense_word(b), phase * dense_word(w.letters))
    chk(bad_phase == 0, f"{bad_phase} phases outside {{+-1, +-i}}")
    chk(bad_dense == 0, f"{bad_dense} products disagree with dense matrices")
    for n in range(1, 5):
        words = [OperatorSum.from_word(w) for w in enumerate_cobs(n).words]
        off = sum(
            trace_inner_product(u, v) != (1 if i == j else 0)
            for i, u in enumerate(words)
            for j, v in enumerate(words)
        )
        chk(off == 0, f"trace orthonormality broken in {off} entries at N={n}")
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        A, B, C = (random_operator(rng, n, 6) for _ in range(3))
        jac = commutator(A, commutator(B, C)) + commutator(B, commutator(C, A)) + commutator(C, commutator(A, B))
        worst = max(worst, jac.max_abs_coefficient())
    chk(worst < 1e-12, f"Jacobi residual {worst:.2e}")
    elapsed = time.perf_counter() - start
    chk(elapsed < 10, f"runtime {elapsed:.1f} s")
    chk.done()


@pytest.mark.criterion(2, "structure constants: b antisymmetric, f symmetric, b + f = 2a")
def test_criterion_02_structure_constants():
    chk = Checks()
    for n in (1, 2):
        sc = structure_constants(enumerate_cobs(n).words)
        chk(all(sc.commutator.get((j, i, k)) == -v for (i, j, k), v in sc.commutator.items()),
            f"b not antisymmetric at N={n}")
        chk(all(sc.anticommutator.get((j, i, k)) == v for (i, j, k), v in sc.anticommutator.items()),
            f"f not symmetric at N={n}")
        keys = set(sc.product) | set(sc.commutator) | set(sc.anticommutator)
        chk(all(sc.commutator.get(k, 0) + sc.anticommutator.get(k, 0) == 2 * sc.product.get(k, 0) for k in keys),
            f"b + f != 2a at N={n}")
        chk(sc.closed, f"COBS not closed at N={n}")
    chk.done()


@pytest.mark.criterion(3, "round trips: matrix expansion and StateSpec <-> density matrix")
def test_criterion_03_round_trips():
    chk = Checks()
    rng = np.random.default_rng(3)
    worst = max(np.abs(expand_operator(m).to_dense() - m).max()
                for m in (random_hermitian_matrix(rng, 8) for _ in range(100)))
    chk(worst < 1e-12, f"matrix round trip error {worst:.2e}")
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        psi = random_state(rng, n)
        rho = np.outer(psi, psi.conj())
        state = expectations_from_state(psi)
        rebuilt = density_matrix_from_expectations(state)
        worst = max(worst, np.abs(rebuilt - rho).max())
        back = max(abs(np.trace(rebuilt @ w.to_dense()).real - state.value(w)) for w in state.basis.words)
        worst = max(worst, back)
    chk(worst < 1e-12, f"state round trip error {worst:.2e}")
    chk.done()


@pytest.mark.criterion(4, "spin, Majorana and Jordan-Wigner relations hold exactly")
def test_criterion_04_spin_majorana_fermions():
    chk = Checks()
    for n in (1, 2, 3):
        for site in range(n):
            s = {c: spin(n, site, c) for c in "xyz"}
            chk(commutator(s["x"], s["y"]) == 1j * s["z"], f"[sx, sy] != i sz (N={n}, site {site})")
            chk(commutator(s["y"], s["z"]) == 1j * s["x"], f"[sy, sz] != i sx (N={n}, site {site})")
            chk(commutator(s["z"], s["x"]) == 1j * s["y"], f"[sz, sx] != i sy (N={n}, site {site})")
            for c in "xyz":
                chk(anticommutator(s[c], s[c]) == OperatorSum.identity(n, 0.5), f"{{s{c}, s{c}}} != 1/2")
            chk(anticommutator(spin(n, site, "+"), spin(n, site, "-")) == OperatorSum.identity(n),
                "{s+, s-} != 1")
            g = {a: majorana(n, site, a) for a in "xyz"}
            chk(commutator(g["x"], g["y"]) == 1j * g["z"], f"[gx, gy] != i gz (N={n}, flavor {site})")
            chk(commutator(g["y"], g["z"]) == 1j * g["x"], f"[gy, gz] != i gx (N={n}, flavor {site})")
            chk(commutator(g["z"], g["x"]) == 1j * g["y"], f"[gz, gx] != i gy (N={n}, flavor {site})")
        one, zero = OperatorSum.identity(n), OperatorSum.zero(n)
        for i in range(n):
            for j in range(n):
                chk(anticommutator(annihilator(n, i), creator(n, j)) == (one if i == j else zero),
                    f"{{c_{i}, c+_{j}}} wrong at N={n}")
                chk(anticommutator(annihilator(n, i), annihilator(n, j)) == zero, f"{{c_{i}, c_{j}}} != 0")
    chk.done()


@pytest.mark.criterion(5, "cumulants: triplet (+1/2, -1/2, -1/2), product states, theta table")
def test_criterion_05_cumulants():
    chk = Checks()
    for spins in ("ud", "du"):
        s = expectations_from_state(basis_state(2, spins))
        worst = max(abs(cumulant(s, [spin(2, 0, c), spin(2, 1, d)])) for c in "xyz" for d in "xyz")
        chk(worst == 0, f"product state {spins}: grade-2 cumulant {worst:.2e}")
    worst = 0.0
    for theta in np.linspace(0, math.pi / 2, 21):
        s = two_spin_state(theta)
        c2, s2 = math.cos(2 * theta), math.sin(2 * theta)
        sa = {c: spin(2, 0, c) for c in "xyz"}
        sb = {c: spin(2, 1, c) for c in "xyz"}
        got = [
            s.expectation(sa["z"]).real,
            s.expectation(sb["z"]).real,
            s.expectation(sa["x"] * sb["x"]).real,
            s.expectation(sa["y"] * sb["y"]).real,
            cumulant(s, [sa["z"], sb["z"]]).real,
        ]
        ref = [-c2 / 2, c2 / 2, s2 / 4, s2 / 4, -(s2**2) / 4]
        worst = max(worst, max(abs(g - r) for g, r in zip(got, ref)))
    chk(worst < 1e-12, f"theta table deviation {worst:.2e}")
    triplet = two_spin_state(math.pi / 4)
    got = {c: 2 * cumulant(triplet, [spin(2, 0, c), spin(2, 1, c)]).real for c in "xyz"}
    for c, ref in zip("xyz", (0.5, -0.5, -0.5)):
        chk(abs(got[c] - ref) < 1e-12, f"triplet D^{c} cumulant = {got[c]:+.3g}, expected {ref:+.3g}")
    chk.done()


def _recursive_cumulant(state, factors):
    def kappa(idx):
        prod = factors[idx[0]]
        for k in idx[1:]:
            prod = prod * factors[k]
        total = state.expectation(prod)
        for part in set_partitions(idx):
            if len(part) > 1:
                total -= math.prod(kappa(b) for b in part)
        return total

    return kappa(list(range(len(factors))))


@pytest.mark.criterion(6, "Meeron partition sum equals the recursive cumulant definition (n = 3)")
def test_criterion_06_meeron():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        s = expectations_from_state(random_state(rng, 3))
        f = [spin(3, k, rng.choice(list("xyz"))) for k in range(3)]
        worst = max(worst, abs(cumulant(s, f) - _recursive_cumulant(s, f)))
    assert worst < 1e-12, f"max deviation {worst:.2e}"


@pytest.mark.criterion(7, "SDEOM equals Lehmann on 50 random systems")
def test_criterion_07_sdeom_lehmann():
    chk = Checks()
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    worst = 0.0
    cases = 0
    while cases < 50:
        H, spec, psi, A, B = random_sdeom_case(rng)
        if np.min(np.diff(spec.eigenvalues)) < 1e-6:
            continue
        cases += 1
        state = expectations_from_state(psi)
        for kind in ("plus", "minus"):
            g = greens_function(assemble(A, B, H, state, kind))
            ref = lehmann_greens(spec, psi, A, B, kind)
            poles = np.concatenate([g.poles, ref.poles, [0.0]])
            lo, hi = poles.min() - 1, poles.max() + 1
            grid = np.linspace(lo, hi, 4000)
            grid = grid[np.min(np.abs(grid[:, None] - poles[None, :]), axis=1) >= 0.05]
            grid = grid[np.linspace(0, grid.size - 1, 200).astype(int)]
            worst = max(worst, np.abs(g(grid) - ref(grid)).max())
    chk(worst < 1e-8, f"max deviation {worst:.2e}")
    elapsed = time.perf_counter() - start
    chk(elapsed < 60, f"runtime {elapsed:.1f} s")
    chk.done()


@pytest.mark.criterion(8, "two-spin Ising triplet: closure dimension 2, poles +-1/2, residues")
def test_criterion_08_ising_triplet():
    chk = Checks()
    H = build_qsm_bond(1.0, 0.0, 0.0)
    s = two_spin_state(math.pi / 4)
    sp, sm = spin(2, 0, "+"), spin(2, 0, "-")
    chk(len(krylov_closure(sp, H)) == 2, "Krylov closure of s+_a is not two-dimensional")
    g = greens_function(assemble(sp, sm, H, s, "plus"))
    ref = lehmann_greens(exact_diagonalize(H), s.psi, sp, sm, "plus")
    chk(g.poles.size == 2 and np.allclose(g.poles, [-0.5, 0.5], atol=1e-10, rtol=0), f"poles {g.poles}")
    chk(g.poles.size == ref.poles.size and np.allclose(g.residues, ref.residues, atol=1e-10, rtol=0),
        f"residues {g.residues} vs {ref.residues}")
    chk.done()


@pytest.mark.criterion(9, "eigenstate residual vanishes on eigenstates and flags |up up> under a field")
def test_criterion_09_eigenstate_residual():
    chk = Checks()
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        H = random_real_hamiltonian(rng, n)
        spec = exact_diagonalize(H)
        for k in range(spec.dimension):
            worst = max(worst, eigenstate_residual(expectations_from_state(spec.state(k)), H).max_abs)
    chk(worst < 1e-12, f"eigenstate residual {worst:.2e}")
    field = spin(2, 0, "x") + spin(2, 1, "x")
    up_up = eigenstate_residual(expectations_from_state(basis_state(2, "uu")), field)
    chk(up_up.max_abs > 1e-3, f"|up up> residual only {up_up.max_abs:.2e}")
    chk.done()


def _chebyshev_derivatives(f, T, n_max, nodes=48):
    """Derivatives at t = 0 of the Chebyshev interpolant of f on [-T, T]."""
    x = np.cos(np.pi * (np.arange(nodes) + 0.5) / nodes)
    vals = np.array([f(T * xi) for xi in x])
    cheb = np.polynomial.chebyshev.Chebyshev.fit(x, vals.real, nodes - 1, domain=[-1, 1])
    cheb_i = np.polynomial.chebyshev.Chebyshev.fit(x, vals.imag, nodes - 1, domain=[-1, 1])
    return [(cheb.deriv(k)(0.0) + 1j * cheb_i.deriv(k)(0.0)) / T**k if k else cheb(0.0) + 1j * cheb_i(0.0)
            for k in range(n_max + 1)]


@pytest.mark.criterion(10, "moment series: derivatives of dense evolution and the Rabi case")
def test_criterion_10_moments():
    chk = Checks()
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(5):
        n = 2
        H = random_real_hamiltonian(rng, n)
        Hd = H.to_dense()
        psi = random_state(rng, n)
        O = OperatorSum.from_word("".join(rng.choice(list("XYZ"), n)))
        Od = O.to_dense()

        def expect(t):
            p = expm(-1j * Hd * t) @ psi
            return np.vdot(p, Od @ p)

        derivs = _chebyshev_derivatives(expect, 1.0, 6)
        m = moment_series(O, H, expectations_from_state(psi), 6)
        # d^n/dt^n <O(t)> at 0 = (-i)^n m_n
        for k in range(7):
            worst = max(worst, abs(derivs[k] - (-1j) ** k * m[k]) / max(1.0, abs(m[k])))
    chk(worst < 1e-6, f"moment/derivative mismatch {worst:.2e}")
    hx = 0.8
    m = moment_series(spin(1, 0, "z"), hx * spin(1, 0, "x"), expectations_from_state(basis_state(1, "u")), 10)
    # cos(hx t)/2 = sum_k (-1)^k hx^(2k) t^(2k) / (2 (2k)!)
    coeff_err = max(abs((-1j) ** k * m[k] - ((-1) ** (k // 2) * hx**k / 2 if k % 2 == 0 else 0)) for k in range(11))
    chk(coeff_err < 1e-10, f"Rabi coefficient error {coeff_err:.2e}")
    chk.done()


@pytest.mark.criterion(11, "perturbation triple: naive, hierarchy and exact routes")
def test_criterion_11_perturbation():
    chk = Checks()
    triplet = two_spin_state(math.pi / 4)
    naive0 = naive_response(0.01, 0.0, 1.0, triplet)
    chk(naive0.value == 0 and naive0.engine_value == 0, f"naive at hz=0 gives {naive0.value}, {naive0.engine_value}")
    for Jz in (1.0, 2.0):
        h = hierarchy_response(0.01, Jz, triplet)
        chk(abs(h.value + 0.01 / Jz) < 1e-12, f"hierarchy at Jz={Jz}: {h.value}")
    for Jz in (1.0, 10.0):
        slope = exact_response_slope(0.0, Jz).slope
        chk(abs(slope / (-2 / Jz) - 1) < 0.01, f"exact slope at Jz={Jz}: {slope}")
    hier = hierarchy_response(0.01, 1.0, triplet).value
    exact = exact_response_slope(0.0, 1.0, hx=0.01).value
    chk(abs(hier / exact - 0.5) < 0.005, f"hierarchy/exact ratio {hier / exact}")
    up_down = two_spin_state(math.pi / 2)
    r = naive_response(0.01, 0.4, 1.0, up_down)
    closed = 4 * 0.01 * 0.4 * 0.5 / (1 - 4 * 0.4**2)
    chk(abs(r.value - closed) < 1e-10, f"naive closed form {r.value} vs {closed}")
    chk(abs(r.engine_value - closed) < 1e-10, f"naive engine {r.engine_value} vs {closed}")
    chk(f"{r.value:.4f}" == "0.0222", f"naive value {r.value}")
    chk.done()


@pytest.mark.criterion(12, "Liouvillian eigenvalues are Bohr frequencies")
def test_criterion_12_liouvillian_spectrum():
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(100):
        H, spec, psi, A, B = random_sdeom_case(rng)
        sys = assemble(A, B, H, expectations_from_state(psi))
        lam = np.linalg.eigvalsh(sys.L)
        bohr = spec.bohr_frequencies()
        worst = max(worst, np.min(np.abs(lam[:, None] - bohr[None, :]), axis=1).max())
    assert worst < 1e-9, f"max distance to a Bohr frequency {worst:.2e}"


@pytest.mark.criterion(13, "CLI: byte-identical reruns, fixture rejection, suite under 2 minutes")
def test_criterion_13_cli(tmp_path, capsys):
    chk = Checks()
    configs = sorted((ROOT / "configs").glob("*.yaml"))
    start = time.perf_counter()
    for cfg in configs:
        for run in ("a", "b"):
            code = main(["run", str(cfg), "--out", str(tmp_path / run / cfg.stem), "--quiet"])
            chk(code == 0, f"{cfg.name} exited with {code}")
    elapsed = time.perf_counter() - start
    for cfg in configs:
        a, b = tmp_path / "a" / cfg.stem, tmp_path / "b" / cfg.stem
        names = sorted(p.name for p in a.iterdir())
        chk(names == sorted(p.name for p in b.iterdir()), f"{cfg.name}: file sets differ")
        for name in names:
            chk((a / name).read_bytes() == (b / name).read_bytes(), f"{cfg.name}: {name} differs between runs")
    chk(elapsed / 2 < 120, f"example suite took {elapsed / 2:.1f} s per pass")
    capsys.readouterr()
    fixtures = {
        "both_state_sources": ["state.theta", "state.eigenstate"],
        "max_grade_too_large": ["state.max_grade"],
        "unknown_grid_key": ["grid", "points"],
        "syntax_error": ["line 4"],
    }
    for name, keys in fixtures.items():
        code = main(["validate", str(ROOT / "tests" / "fixtures" / f"{name}.yaml")])
        err = capsys.readouterr().err
        chk(code == 2, f"{name}: validate exited with {code}")
        chk(all(k in err for k in keys), f"{name}: diagnostic {err.strip()!r} lacks {keys}")
    chk.done()
