"""Command-line driver.

    adtkit run <config> [--out DIR] [--seed N] [--quiet]
    adtkit validate <config>

The output directory is taken from --out, then the ADTKIT_OUT environment
variable, then the config's ``output`` key, then ``./adtkit-out``.
Exit status: 0 success, 1 failed cross-check, 2 bad config, 3 runtime error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import spin
from .cobs import cumulant, enumerate_cobs, expectations_from_state, grade2_pair, two_spin_state
from .config import RunConfig, parse_config, parse_operator
from .errors import AdtError, ConfigError
from .models import ModelSpec, build_hubbard_atom, build_kondo_local, build_qsm_bond, build_qsm_lattice
from .oracle import compare_greens, exact_diagonalize, lehmann_greens
from .perturbation import perturbation_triple
from .sdeom import assemble, correlator_moments, moment_series, pivotal_channels, solve_frequency
from .tables import read_state_csv, write_csv

log = logging.getLogger("adtkit")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
SNAP = 1e-6
COMPARE_MARGIN = 0.05
COMPARE_TOL = 1e-8


def build_hamiltonian(cfg: RunConfig):
    m = cfg.model
    kind = m["kind"]
    if kind == "qsm-bond":
        return build_qsm_bond(m["Jz"], m["hz"], m["hx"])
    if kind == "hubbard-atom":
        return build_hubbard_atom(m["mu_up"], m["mu_dn"], m["U"])
    if kind == "kondo-local":
        return build_kondo_local(m["mu"], m["h"], m["Jk"], m["flavor_order"])
    return build_qsm_lattice(ModelSpec(m["n_sites"], m["fields"], m["couplings"]))


def build_state(cfg: RunConfig, H):
    s = cfg.state
    basis = enumerate_cobs(cfg.n_sites, s["max_grade"])
    if s["source"] == "theta":
        st = two_spin_state(s["theta"])
        return expectations_from_state(st.psi, basis, label=st.label)
    if s["source"] == "eigenstate":
        spec = exact_diagonalize(H)
        return expectations_from_state(spec.state(s["eigenstate"]), basis, label=f"eigenstate {s['eigenstate']}")
    if "file" in s:
        return read_state_csv(s["file"], cfg.n_sites, label=Path(s["file"]).name)
    from .cobs import StateSpec

    return StateSpec.from_rows(cfg.n_sites, s["rows"].items(), label="inline table")


def _grid(cfg: RunConfig, avoid) -> np.ndarray:
    g = cfg.grid
    omega = np.linspace(g["min"], g["max"], g["count"])
    avoid = np.asarray(sorted(set(np.round(np.asarray(avoid, dtype=float), 12))))
    if avoid.size:
        for k, w in enumerate(omega):
            moved = w
            while np.min(np.abs(moved - avoid)) < SNAP:
                moved = moved + SNAP
            if moved != w:
                log.info("grid point %.17g collides with a pole; snapped to %.17g", w, moved)
                omega[k] = moved
    return omega


def _kinds(cfg):
    k = cfg.operators.get("kind", "both")
    return ("plus", "minus") if k == "both" else (k,)


class Runner:
    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.written: list[Path] = []
        self.checks_ok = True

    def path(self, name: str) -> Path:
        p = self.out / name
        self.written.append(p)
        return p

    def run(self):
        cfg = self.cfg
        self.H = build_hamiltonian(cfg)
        self.state = build_state(cfg, self.H)
        if cfg.operators:
            self.O_i = parse_operator(cfg.operators["initial"], cfg.n_sites, "operators.initial")
            self.O_f = parse_operator(cfg.operators["final"], cfg.n_sites, "operators.final")
        for task in cfg.tasks:
            log.info("task %s", task)
            try:
                getattr(self, "task_" + task.replace("-", "_"))()
            except AdtError as exc:
                raise AdtError(f"task {task}: {exc}") from exc
        self.manifest()

    def systems(self):
        if not hasattr(self, "_systems"):
            self._systems = {
                k: assemble(self.O_i, self.O_f, self.H, self.state, kind=k) for k in _kinds(self.cfg)
            }
        return self._systems

    def task_greens(self):
        systems = self.systems()
        avoid = [lam for s in systems.values() for lam in np.linalg.eigvalsh(s.L)]
        omega = _grid(self.cfg, avoid)
        pole_rows, grid_rows = [], []
        for kind, s in systems.items():
            gf = solve_frequency(s, omega, eta=self.cfg.grid["eta"])
            for p, re, im in gf.pole_table():
                pole_rows.append((kind, p, re, im))
            vals = gf(omega, eta=self.cfg.grid["eta"])
            for w, g in zip(omega, vals):
                grid_rows.append((kind, float(w), float(self.cfg.grid["eta"]), float(g.real), float(g.imag)))
        write_csv(self.path("poles.csv"), ["kind", "pole", "re", "im"], pole_rows)
        write_csv(self.path("greens.csv"), ["kind", "re_omega", "im_omega", "re_G", "im_G"], grid_rows)

    def task_cumulants(self):
        n = self.cfg.n_sites
        rows = []
        for a, b in combinations(range(n), 2):
            pair = grade2_pair(n, a, b)
            for c in "xyz":
                val = 2 * cumulant(self.state, [spin(n, a, c), spin(n, b, c)])
                rows.append((f"D^{c}", f"{a}-{b}", float(val.real), float(val.imag)))
            for c in "xyz":
                for d in "xyz":
                    val = cumulant(self.state, [spin(n, a, c), spin(n, b, d)])
                    rows.append((f"s^{c}_a s^{d}_b", f"{a}-{b}", float(val.real), float(val.imag)))
            for name in ("S", "eta", "B_S", "B_A", "D"):
                for c in "xyz":
                    val = self.state.expectation(getattr(pair, name)[c])
                    rows.append((f"<{name}^{c}>", f"{a}-{b}", float(val.real), float(val.imag)))
        write_csv(self.path("cumulants.csv"), ["quantity", "sites", "re", "im"], rows)

    def task_pivotal(self):
        text = "".join(pivotal_channels(s).to_text() + "\n" for s in self.systems().values())
        self.path("pivotal.txt").write_text(text, encoding="utf-8")

    def task_perturb(self):
        m = self.cfg.model
        report = perturbation_triple(self.cfg.perturb["hx"], m["hz"], m["Jz"], self.state,
                                     self.cfg.perturb.get("hx_probe"))
        self.path("perturb.csv").write_text(report.to_csv(), encoding="utf-8")
        log.info("\n%s", report.to_text())

    def task_oracle_compare(self):
        spec = exact_diagonalize(self.H)
        psi = self.state.psi
        if psi is None:
            raise ConfigError("oracle-compare needs a wavefunction", key="state")
        chunks = []
        for kind, s in self.systems().items():
            a = solve_frequency(s)
            b = lehmann_greens(spec, psi, self.O_i, self.O_f, kind)
            poles = np.concatenate([a.poles, b.poles, [0.0]])
            omega = np.linspace(self.cfg.grid["min"], self.cfg.grid["max"], self.cfg.grid["count"])
            keep = np.min(np.abs(omega[:, None] - poles[None, :]), axis=1) >= COMPARE_MARGIN
            cmp = compare_greens(a, b, omega[keep], COMPARE_TOL, COMPARE_MARGIN)
            self.checks_ok &= cmp.passed
            chunks.append(f"kind: {kind}\n" + cmp.to_text(("sdeom", "lehmann")))
        self.path("compare.txt").write_text("\n".join(chunks), encoding="utf-8")
        if not self.checks_ok:
            log.warning("oracle comparison failed; see compare.txt")

    def task_moments(self):
        nmax = self.cfg.moments["n_max"]
        rows = []
        for n, m in enumerate(moment_series(self.O_i, self.H, self.state, nmax)):
            rows.append(("expectation", n, float(m.real), float(m.imag)))
        for kind in _kinds(self.cfg):
            for n, m in enumerate(correlator_moments(self.O_i, self.O_f, self.H, self.state, nmax, kind)):
                rows.append((f"correlator-{kind}", n, float(m.real), float(m.imag)))
        write_csv(self.path("moments.csv"), ["series", "n", "re", "im"], rows)

    def manifest(self):
        files = {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(self.written)}
        doc = {
            "config": self.cfg.source,
            "config_sha256": self.cfg.sha256,
            "seed": self.cfg.seed,
            "tasks": list(self.cfg.tasks),
            "versions": {"adtkit": __version__, "numpy": np.__version__, "python": sys.version.split()[0]},
            "outputs": files,
            "checks_passed": self.checks_ok,
        }
        p = self.path("manifest.json")
        p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def cleanup(self):
        for p in self.written:
            if p.exists():
                p.unlink()


def resolve_out(cfg: RunConfig, flag: str | None) -> Path:
    if flag:
        return Path(flag)
    env = os.environ.get("ADTKIT_OUT")
    if env:
        return Path(env)
    if cfg.output:
        return Path(cfg.base_dir) / cfg.output
    return Path("adtkit-out")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="adtkit", description="Operator-algebra equations of motion for small spin systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the tasks of a config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--quiet", action="store_true", help="only print warnings and errors")
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    p_val.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s: %(message)s", force=True
    )
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        if not args.quiet:
            print(f"{args.config}: ok ({', '.join(cfg.tasks)})")
        return EXIT_OK
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    out = resolve_out(cfg, args.out)
    out.mkdir(parents=True, exist_ok=True)
    runner = Runner(cfg, out)
    try:
        runner.run()
    except ConfigError as exc:
        runner.cleanup()
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AdtError, ArithmeticError, ValueError) as exc:
        runner.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("wrote %d files to %s", len(runner.written), out)
    return EXIT_OK if runner.checks_ok else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
