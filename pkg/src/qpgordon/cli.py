"""Command-line front end for finite-scale Gordon-criterion checks.

Every subcommand reads an :class:`ExperimentConfig` (INI file section
``[experiment]`` and/or flags; flags win), writes CSV/JSON artifacts into
the output directory and a ``manifest.json`` describing the run.  CSV and
JSON artifacts depend only on the configuration; the manifest also holds
timestamps and wall time.

Exit codes: 0 success or criterion satisfied, 1 usage/config error,
2 hypothesis failed, 3 inconclusive, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from . import __version__, kernels
from .cocycle import build_uniform_config, factorize, lyapunov, schrodinger, uniform_upper_margin
from .contfrac import beta_estimate, expand
from .discrepancy import orbit_discrepancy_bound, rotation_orbit, star_discrepancy
from .errors import QPGordonError, SpecError
from .gordon import GordonConfig, verdict
from .periodic_fn import (
    bounded_factor,
    log_envelope,
    mean_log,
    one_plus_abs,
    parse_potential,
    semi_variation,
    total_variation,
    variation_by_refinement,
)
from .spectrum import build_box, eigenvalues, eigenvector, regime_scan

SCHEMA_VERSION = 1
PRECISION_ENV = "QPGORDON_PRECISION"
SUBCOMMANDS = ("contfrac", "discrepancy", "variation", "lyapunov", "uniform-bound",
               "gordon-check", "spectrum", "regime-scan")


def _default_precision() -> int:
    return int(os.environ.get(PRECISION_ENV, "53"))


@dataclass
class ExperimentConfig:
    """All inputs of a run.

    ``phases`` entries are exact decimals or fractions, or ``random:<k>``
    (``k`` seeded rational phases).  ``energies`` entries are numbers,
    ``lo:hi:count`` grids, or ``mid`` (a mid-spectrum box eigenvalue).
    """

    alpha: str = "surd:(sqrt(5)-1)/2"
    potential: str = "amo:lambda=2"
    phases: tuple = ("0.15",)
    energies: tuple = ("0",)
    epsilon: float = 0.1
    precision: int = field(default_factory=_default_precision)
    q_budget_digits: int = 10_000
    depth: int = 80
    n: int = 1024
    n_phases: int = 64
    box_half_width: int = 50
    q_list: tuple = ()
    directions: int = 360
    output: str = "qpgordon-out"
    seed: int = 0

    # ---- config file round trip -------------------------------------------
    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["experiment"] = {f.name: _dump(getattr(self, f.name)) for f in fields(self)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise SpecError(f"config: {exc}") from None
        if "experiment" not in cp:
            raise SpecError("config: missing [experiment] section")
        return cls().updated(dict(cp["experiment"]))

    def updated(self, values: dict) -> "ExperimentConfig":
        """Copy with string values parsed according to field types."""
        kinds = {f.name: f for f in fields(self)}
        new = asdict(self)
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in kinds:
                raise SpecError(f"config: unknown key {key!r}")
            new[key] = _load(raw, type(getattr(self, key)), key)
        return ExperimentConfig(**new)


def _dump(v) -> str:
    if isinstance(v, tuple):
        return ";".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _load(raw, kind, key):
    if not isinstance(raw, str):
        return raw
    try:
        if kind is tuple:
            return tuple(s.strip() for s in raw.split(";") if s.strip())
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise SpecError(f"config: bad value for {key}: {raw!r}") from None
    return raw


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, arrays become lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, mpmath.mpf):
        return _clean(float(obj))
    return obj


class _Run:
    """Collects artifacts and the operation log for one subcommand."""

    def __init__(self, cfg: ExperimentConfig, sub: str):
        self.cfg = cfg
        self.sub = sub
        self.out = Path(cfg.output)
        self.files: dict[str, str] = {}
        self.ops: list[str] = []
        self.jobs = 1
        self.t0 = time.time()

    def op(self, name: str):
        self.ops.append(name)

    def write_csv(self, name: str, header: list, rows: list):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        self._write(name, buf.getvalue())

    def write_json(self, name: str, obj: dict):
        obj = {"schema_version": SCHEMA_VERSION, **_clean(obj)}
        self._write(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def _write(self, name, text):
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()

    def manifest(self, exit_code: int):
        m = {
            "schema_version": SCHEMA_VERSION,
            "subcommand": self.sub,
            "config": asdict(self.cfg),
            "seed": self.cfg.seed,
            "exit_code": exit_code,
            "versions": {
                "qpgordon": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "mpmath": mpmath.__version__,
                "kernel_backend": kernels.BACKEND,
            },
            "operations": self.ops,
            "outputs": self.files,
            "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(self.t0)),
            "wall_time_s": round(time.time() - self.t0, 3),
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(_clean(m), indent=2, sort_keys=True) + "\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, mpmath.mpf):
        return mpmath.nstr(v, 17)
    return str(v)


def _phases(cfg: ExperimentConfig) -> list:
    out = []
    rng = np.random.default_rng(cfg.seed)
    for p in cfg.phases:
        if p.startswith("random:"):
            k = int(p.split(":", 1)[1])
            out += [Fraction(int(v), 2 ** 32) for v in rng.integers(0, 2 ** 32, size=k)]
        else:
            try:
                out.append(Fraction(p) % 1)
            except (ValueError, ZeroDivisionError):
                raise SpecError(f"bad phase {p!r}") from None
    if not out:
        raise SpecError("no phases given")
    return out


def _energies(cfg: ExperimentConfig, allow_mid: bool = False) -> list:
    out = []
    for e in cfg.energies:
        if e == "mid":
            if not allow_mid:
                raise SpecError("energy 'mid' is only meaningful for gordon-check")
            out.append("mid")
        elif e.count(":") == 2:
            lo, hi, cnt = e.split(":")
            try:
                out += [float(v) for v in np.linspace(float(lo), float(hi), int(cnt))]
            except ValueError:
                raise SpecError(f"bad energy grid {e!r}") from None
        else:
            try:
                out.append(float(e))
            except ValueError:
                raise SpecError(f"bad energy {e!r}") from None
    if not out:
        raise SpecError("no energies given")
    return out


def _alpha(cfg: ExperimentConfig):
    spec = cfg.alpha
    if spec.startswith("liouville:") and "budget=" not in spec:
        spec += f",budget={cfg.q_budget_digits}"
    depth = None if spec.split(":", 1)[0] in ("liouville", "cf", "rat") else cfg.depth
    return expand(spec, depth)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_contfrac(cfg, run: _Run) -> int:
    cf = _alpha(cfg)
    run.op("contfrac.expand")
    beta = dict(beta_estimate(cf).per_k_values) if cf.depth >= 2 else {}
    run.op("contfrac.beta_estimate")
    rows = [(k, cf.quotients[k - 1], cf.p(k), cf.q(k), beta.get(k, "")) for k in range(1, cf.depth + 1)]
    run.write_csv("contfrac.csv", ["k", "a_k", "p_k", "q_k", "beta_k"], rows)
    return 0


def cmd_discrepancy(cfg, run: _Run) -> int:
    cf = _alpha(cfg)
    x = _phases(cfg)[0]
    rows = []
    for k in range(1, cf.depth + 1):
        q = cf.q(k)
        if q <= 2 ** 16 and k < cf.depth:
            D = star_discrepancy(rotation_orbit(x, cf, q, tol=Fraction(1, 4 * q)))
            run.op("discrepancy.star_discrepancy")
            exact = 1
        else:
            try:
                D = orbit_discrepancy_bound(x, cf, k)
            except QPGordonError:
                continue
            run.op("discrepancy.orbit_discrepancy_bound")
            exact = 0
        bound = Fraction(2, q)
        rows.append((k, q, float(D), float(bound), float(bound - D), exact))
    run.write_csv("discrepancy.csv", ["k", "q_k", "D_star", "bound", "margin", "exact"], rows)
    return 0


def cmd_variation(cfg, run: _Run) -> int:
    f = parse_potential(cfg.potential)
    rows = []
    tv = total_variation(f)
    rows.append(("total_variation", float(tv.lower), int(tv.exact_flag)))
    sv = semi_variation(f)
    rows.append(_semi_row("semi_variation", sv))
    bf = total_variation(bounded_factor(f))
    rows.append(("bounded_factor_variation", float(bf.lower), int(bf.exact_flag)))
    rows.append(("bounded_factor_refined_4096", variation_by_refinement(bounded_factor(f), 4096), 0))
    ml = mean_log(f)
    rows.append(("mean_log", ml.value, 0))
    rows.append(("mean_log_error", ml.error, 0))
    lv = total_variation(log_envelope(f))
    rows.append(("log_envelope_variation", float(lv.lower), int(lv.exact_flag)))
    rows.append(_semi_row("F_semi_variation", semi_variation(one_plus_abs(f))))
    run.op("periodic_fn.total_variation")
    run.op("periodic_fn.semi_variation")
    run.op("periodic_fn.mean_log")
    run.write_csv("variation.csv", ["quantity", "value", "exact"], rows)
    return 0


def _semi_row(name, sv):
    if sv.exact is not None:
        return (name, float(sv.exact), 1)
    return (name, float(sv.value), 0)


def cmd_lyapunov(cfg, run: _Run) -> int:
    cf = _alpha(cfg)
    f = parse_potential(cfg.potential)
    rows = []
    for E in _energies(cfg):
        est = lyapunov(schrodinger(f, E), cfg.n, cfg.n_phases, cf, keep_per_phase=False)
        run.op("cocycle.lyapunov")
        chain = dict(est.monotone_chain)
        a2, a4 = chain[max(1, cfg.n // 2)], chain[max(1, cfg.n // 4)]
        rows.append((E, cfg.n, cfg.n_phases, est.value, a2, a4, est.differenced, a2 - est.value))
    run.write_csv("lyapunov.csv", ["E", "n", "phases", "L_hat", "L_half", "L_quarter",
                                   "differenced", "margin_chain"], rows)
    return 0


def cmd_uniform_bound(cfg, run: _Run) -> int:
    cf = _alpha(cfg)
    f = parse_potential(cfg.potential)
    _, G_of = factorize(f)
    summary = []
    grid = cfg.n_phases
    x = (np.arange(grid) + 0.5) / grid
    profile_rows = []
    ok = True
    for E in _energies(cfg):
        G = G_of(E)
        ucfg = build_uniform_config(G, cf, cfg.epsilon, n_max=cfg.n, grid=grid)
        run.op("cocycle.build_uniform_config")
        rep = uniform_upper_margin(G, ucfg, cfg.n, x, cf)
        run.op("cocycle.uniform_upper_margin")
        ok = ok and rep.passed
        summary.append({"E": E, "L_hat": rep.L_hat, "chain": rep.chain, "margins": rep.margins,
                        "best_margin": rep.best_margin, "passed": rep.passed,
                        "config": asdict(ucfg)})
        profile_rows += [(E, float(xi), float(g)) for xi, g in zip(x, rep.profile)]
    run.write_csv("uniform_bound_profile.csv", ["E", "x", "g_n"], profile_rows)
    run.write_json("uniform_bound.json", {"epsilon": cfg.epsilon, "results": summary})
    return 0 if ok else 3


def _mid_energy(f, x, cf, q_max: int) -> float:
    op = build_box(f, x, cf, q_max)
    ev = eigenvalues(op)
    return float(ev[len(ev) // 2])


def cmd_gordon_check(cfg, run: _Run) -> int:
    cf = _alpha(cfg)
    f = parse_potential(cfg.potential)
    x = _phases(cfg)[0]
    if cfg.q_list:
        q_list = tuple(int(q) for q in cfg.q_list)
    else:
        q_list = tuple(q for q in cf.denominators[1:cf.depth] if 3 <= q <= 4000)[:2]
    if not q_list:
        raise SpecError("no usable denominators; set q_list")
    E = _energies(cfg, allow_mid=True)[0]
    if E == "mid":
        E = _mid_energy(f, x, cf, max(q_list))
        run.op("spectrum.eigenvalues")
    gcfg = GordonConfig(q_list=q_list, epsilon=cfg.epsilon, directions=cfg.directions,
                        n_lyap=cfg.n, lyap_phases=cfg.n_phases,
                        precision=None if cfg.precision <= 53 else cfg.precision)
    rep = verdict(f, x, cf, E, gcfg)
    run.op("gordon.verdict")
    run.write_json("gordon_report.json", rep.to_dict())
    cols = ["q", "defect_fwd", "defect_bwd", "defect_threshold", "lambda_plus", "lambda_minus",
            "gap1", "gap2_ratio", "gap_threshold", "trace", "witness", "passed"]
    rows = [[getattr(r, c) if c != "passed" else int(r.passed) for c in cols] for r in rep.records]
    run.write_csv("gordon_summary.csv", cols, rows)
    print(rep.verdict)
    return rep.exit_code


def cmd_spectrum(cfg, run: _Run) -> int:
    cf = _alpha(cfg)
    f = parse_potential(cfg.potential)
    x = _phases(cfg)[0]
    op = build_box(f, x, cf, cfg.box_half_width)
    run.op("spectrum.build_box")
    ev = eigenvalues(op)
    run.op("spectrum.eigenvalues")
    with ThreadPoolExecutor(max(1, run.jobs)) as ex:
        pairs = list(ex.map(lambda E: eigenvector(op, E, seed=cfg.seed), ev))
    run.op("spectrum.eigenvector")
    rows = [(i, p.energy, p.residual, p.decay_rate) for i, p in enumerate(pairs)]
    run.write_csv("eigenvalues.csv", ["index", "E", "residual", "decay_rate"], rows)
    return 0


def cmd_regime_scan(cfg, run: _Run) -> int:
    cf = _alpha(cfg)
    f = parse_potential(cfg.potential)
    x = _phases(cfg)[0]
    rows = regime_scan(f, x, cf, _energies(cfg), cfg.box_half_width, n_lyap=cfg.n,
                       phases=cfg.n_phases, jobs=run.jobs)
    run.op("spectrum.regime_scan")
    run.write_csv("regime_scan.csv", ["E", "L_hat", "beta_hat", "label", "nearest_eigenvalue",
                                      "distance"],
                  [(r.E, r.L_hat, r.beta_hat, r.label, r.nearest_eigenvalue, r.distance)
                   for r in rows])
    return 0


COMMANDS = {
    "contfrac": cmd_contfrac,
    "discrepancy": cmd_discrepancy,
    "variation": cmd_variation,
    "lyapunov": cmd_lyapunov,
    "uniform-bound": cmd_uniform_bound,
    "gordon-check": cmd_gordon_check,
    "spectrum": cmd_spectrum,
    "regime-scan": cmd_regime_scan,
}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

_FLAG_KEYS = {
    "alpha": "alpha", "potential": "potential", "phase": "phases", "energy": "energies",
    "epsilon": "epsilon", "precision": "precision", "q_budget_digits": "q_budget_digits",
    "depth": "depth", "n": "n", "phases": "n_phases", "box_half_width": "box_half_width",
    "q_list": "q_list", "directions": "directions", "output": "output", "seed": "seed",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qpgordon", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qpgordon {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="INI file with an [experiment] section")
        s.add_argument("--write-config", help="write the effective config to this file")
        s.add_argument("--alpha", help="frequency spec, e.g. surd:(sqrt(5)-1)/2")
        s.add_argument("--potential", help="potential spec, e.g. amo:lambda=2")
        s.add_argument("--phase", action="append", help="phase (repeatable) or random:<k>")
        s.add_argument("--energy", action="append",
                       help="energy, lo:hi:count grid, or mid (repeatable)")
        s.add_argument("--epsilon", type=float)
        s.add_argument("--precision", type=int, help=f"mantissa bits (default ${PRECISION_ENV} or 53)")
        s.add_argument("--q-budget-digits", dest="q_budget_digits", type=int)
        s.add_argument("--depth", type=int)
        s.add_argument("--n", type=int, help="product length")
        s.add_argument("--phases", type=int, help="phase grid size")
        s.add_argument("--box-half-width", dest="box_half_width", type=int)
        s.add_argument("--q-list", dest="q_list", help="denominators, ';' separated")
        s.add_argument("--directions", type=int)
        s.add_argument("--output", "-o")
        s.add_argument("--seed", type=int)
        s.add_argument("--jobs", type=int, default=1)
    return p


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        try:
            cfg = ExperimentConfig.from_ini(Path(args.config).read_text())
        except OSError as exc:
            raise SpecError(f"cannot read config: {exc}") from None
    values = {}
    for flag, key in _FLAG_KEYS.items():
        v = getattr(args, flag, None)
        if v is None:
            continue
        if isinstance(v, list):
            v = tuple(v)
        elif key == "q_list":
            v = tuple(s for s in str(v).split(";") if s)
        values[key] = v
    return cfg.updated(values)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        cfg = config_from_args(args)
        if args.write_config:
            Path(args.write_config).write_text(cfg.to_ini())
        run = _Run(cfg, args.command)
        run.jobs = args.jobs
        # parse the specs up front so config errors exit with 1
        parse_potential(cfg.potential)
        code = COMMANDS[args.command](cfg, run)
    except SpecError as exc:
        print(f"qpgordon: {exc}", file=sys.stderr)
        return 1
    except QPGordonError as exc:
        print(f"qpgordon: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    run.manifest(code)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
