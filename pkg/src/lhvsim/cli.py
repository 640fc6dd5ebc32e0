"""Command-line front end.

Every command writes its tables into ``--output`` together with a
``manifest.json`` holding the fully resolved configuration; passing that file
back through ``--manifest`` reruns the command bit for bit.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import json
import logging
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, scenarios as sc
from .p1 import P1Params, default_scale
from .sampling import RngStream, calibrate_scale

logger = logging.getLogger("lhvsim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STATISTICAL = 3

SEED_ENV = "LHVSIM_SEED"

REPORT_COLUMNS = ["protocol", "scenario", "d", "setup_index", "N_ini", "N_out",
                  "accept_ratio", "delta", "std_err", "seed"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = "run-random"
    protocol: str = "P1"
    scenario: str = "pm"
    d: int = 2
    n: int = 20
    n_ini: int = 40_000
    seed: int = 0
    scale: float | None = None
    alpha: float | None = None
    cutoff: float = 0.5
    cutoffs: str = ""
    calib_alpha: float = 10.0
    shared_pool: bool = False
    threads: int = 0
    output: str = "out"
    table: int = 0

    def params(self) -> P1Params:
        return P1Params(d=self.d, alpha=self.alpha, scale=self.scale, cutoff=self.cutoff)

    def cutoff_list(self) -> tuple[float, ...]:
        if not self.cutoffs.strip():
            return sc.DEFAULT_CUTOFFS
        return tuple(_parse_fraction(x) for x in self.cutoffs.split(","))

    def n_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


def _parse_fraction(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, value):
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key {name!r}")
    if value is None:
        return None
    kind = _FIELDS[name].type
    try:
        if kind == "bool":
            if isinstance(value, bool):
                return value
            return str(value).strip().lower() in ("1", "true", "yes", "on")
        if kind == "int":
            return int(value)
        if kind == "float" or kind == "float | None":
            return _parse_fraction(str(value)) if isinstance(value, str) else float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc
    return str(value)


def load_config_file(path: str | os.PathLike) -> dict:
    """Flat ``key = value`` pairs from every section of an INI-style file."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            out[key.replace("-", "_")] = value
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    env_seed = os.environ.get(SEED_ENV)
    if env_seed:
        values["seed"] = env_seed
    if args.manifest:
        try:
            values.update(json.loads(Path(args.manifest).read_text())["config"])
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read manifest {args.manifest}: {exc}") from exc
    if args.config:
        values.update(load_config_file(args.config))
    for name in _FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    values["command"] = args.command
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in values.items()})
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.protocol not in sc.PROTOCOLS:
        raise ConfigError(f"unknown protocol {cfg.protocol!r}; known: {sorted(sc.PROTOCOLS)}")
    if cfg.scenario not in sc.SCENARIOS:
        raise ConfigError(f"scenario must be one of {sc.SCENARIOS}, got {cfg.scenario!r}")
    if cfg.d < 2:
        raise ConfigError(f"dimension must be >= 2, got {cfg.d}")
    if cfg.d > 4:
        warnings.warn(f"d={cfg.d} is outside the calibrated range 2..4; "
                      f"using scale {default_scale(cfg.d)}", stacklevel=2)
    if cfg.n < 1 or cfg.n_ini < 1:
        raise ConfigError("n and n_ini must be positive")
    try:
        cfg.params()
        cfg.cutoff_list()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.command == "reproduce-table" and cfg.table not in TABLES:
        raise ConfigError(f"table must be one of {sorted(TABLES)}, got {cfg.table}")


# --- output ------------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _report_rows(rep: sc.StudyReport, extra: list | None = None, per_setup: bool = True,
                 setup_extra=None) -> list[list]:
    rows = []
    if per_setup:
        for s in rep.setups:
            tail = setup_extra(s) if setup_extra else ([""] * len(extra or []))
            rows.append([rep.protocol, rep.scenario, rep.d, s.index, s.n_ini, s.n_out,
                         s.accept_ratio, s.delta, "", rep.seed] + tail)
    rows.append([rep.protocol, rep.scenario, rep.d, "mean", rep.n_ini, rep.n_out,
                 rep.accept_ratio, rep.mean_delta, rep.std_err, rep.seed] + list(extra or []))
    return rows


def _distribution_rows(rep: sc.StudyReport) -> list[list]:
    rows = []
    for s in rep.setups:
        emp = s.empirical.probs
        q = np.asarray(s.quantum)
        if emp.ndim == 1:
            for b in range(emp.shape[0]):
                rows.append([rep.scenario, s.index, s.label, "", b, emp[b], q[b]])
        else:
            for a in range(emp.shape[0]):
                for b in range(emp.shape[1]):
                    rows.append([rep.scenario, s.index, s.label, a, b, emp[a, b], q[a, b]])
    return rows


DIST_COLUMNS = ["scenario", "setup_index", "label", "a", "b", "empirical", "quantum"]


class Output:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.dir = Path(cfg.output)
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
            probe = self.dir / ".write-test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"cannot write to {self.dir}: {exc}") from exc
        self.files: list[str] = []

    def csv(self, name: str, header: list[str], rows: list[list]) -> None:
        _write_csv(self.dir / name, header, rows)
        self.files.append(name)

    def manifest(self, summary: dict) -> None:
        data = {"lhvsim_version": __version__, "numpy_version": np.__version__,
                "config": dataclasses.asdict(self.cfg), "outputs": self.files,
                "summary": {k: fmt(v) for k, v in summary.items()}}
        (self.dir / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# --- commands ----------------------------------------------------------------


def _study_kwargs(cfg: RunConfig) -> dict:
    kw = {"shared_pool": cfg.shared_pool, "threads": cfg.n_threads()}
    if cfg.protocol == "P1":
        kw["params"] = cfg.params()
    return kw


def run_random(cfg: RunConfig) -> dict:
    out = Output(cfg)
    rep = sc.randomized_study(cfg.protocol, cfg.scenario, cfg.d, cfg.n, cfg.n_ini, cfg.seed,
                              **_study_kwargs(cfg))
    out.csv("report.csv", REPORT_COLUMNS, _report_rows(rep))
    out.csv("distributions.csv", DIST_COLUMNS, _distribution_rows(rep))
    floor, floor_se = sc.noise_floor(rep, cfg.seed)
    summary = {"mean_delta": rep.mean_delta, "std_err": rep.std_err, "noise_floor": floor,
               "noise_floor_std_err": floor_se, "accept_ratio": rep.accept_ratio,
               "flagged": len(rep.flagged)}
    out.manifest(summary)
    return summary


def run_phi(cfg: RunConfig) -> dict:
    cfg = dataclasses.replace(cfg, d=3, scenario="pm")
    out = Output(cfg)
    rep = sc.phi_study(cfg.protocol, cfg.n, cfg.n_ini, cfg.seed, **_study_kwargs(cfg))
    phis = rep.extra["phi"]
    header = REPORT_COLUMNS + ["phi", "P_b1", "P_b2", "P_b3", "Q_b1", "Q_b2", "Q_b3"]

    def tail(s):
        return [phis[s.index], *s.empirical.probs, *s.quantum]

    out.csv("report.csv", header, _report_rows(rep, extra=[""] * 7, setup_extra=tail))
    out.csv("distributions.csv", DIST_COLUMNS, _distribution_rows(rep))
    summary = {"mean_delta": rep.mean_delta, "std_err": rep.std_err}
    out.manifest(summary)
    return summary


def run_cglmp(cfg: RunConfig) -> dict:
    cfg = dataclasses.replace(cfg, d=3, scenario="ent")
    out = Output(cfg)
    rep = sc.cglmp_study(cfg.protocol, cfg.n_ini, cfg.seed, **_study_kwargs(cfg))
    rows = _report_rows(rep, extra=[rep.extra["I3"]], setup_extra=lambda s: [""])
    rows.append(["quantum", "ent", 3, "mean", "", "", "", 0.0, "", "", rep.extra["I3_quantum"]])
    out.csv("report.csv", REPORT_COLUMNS + ["I3"], rows)
    out.csv("distributions.csv", DIST_COLUMNS, _distribution_rows(rep))
    summary = {"mean_delta": rep.mean_delta, "I3": rep.extra["I3"],
               "I3_quantum": rep.extra["I3_quantum"]}
    out.manifest(summary)
    return summary


def sweep_delta(cfg: RunConfig) -> dict:
    out = Output(cfg)
    rows_out = sc.delta_sweep(cfg.d, cfg.cutoff_list(), cfg.n, cfg.n_ini, cfg.seed,
                              scenario=cfg.scenario, threads=cfg.n_threads(),
                              scale=cfg.scale, alpha=cfg.alpha)
    rows = []
    for r in rows_out:
        rows += _report_rows(r.report, extra=[r.cutoff], per_setup=False)
    out.csv("report.csv", REPORT_COLUMNS + ["cutoff"], rows)
    summary = {f"delta@{r.cutoff:.6f}": r.delta for r in rows_out}
    out.manifest(summary)
    return summary


CALIB_COLUMNS = ["d", "scale", "alpha", "N", "base_rate", "scaled_rate", "ratio",
                 "ratio_std_err", "clamp_fraction", "seed"]


def calibrate_m(cfg: RunConfig) -> dict:
    out = Output(cfg)
    params = cfg.params()
    try:
        rep = calibrate_scale(sc.p1_weight_sampler(cfg.d, params), params.scale, cfg.calib_alpha,
                              n=cfg.n_ini, rng=RngStream(cfg.seed, (cfg.d,)))
    except ValueError as exc:
        raise sc.StatisticalFailure(str(exc)) from exc
    out.csv("calibration.csv", CALIB_COLUMNS,
            [[cfg.d, rep.scale, rep.alpha, rep.n, rep.base_rate, rep.scaled_rate, rep.ratio,
              rep.ratio_stderr, rep.clamp_fraction, cfg.seed]])
    summary = {"ratio": rep.ratio, "base_rate": rep.base_rate}
    out.manifest(summary)
    return summary


# desk-scale versions of the published tables
TABLES = {
    1: "d=2 randomized study, both scenarios",
    2: "cutoff sweep, d=3 and d=4",
    3: "d=3 randomized study, both scenarios",
    4: "CGLMP setup",
    5: "d=4 randomized study, both scenarios",
}

_DESK_N_INI = {2: 40_000, 3: 50_000, 4: 150_000}


def reproduce_table(cfg: RunConfig) -> dict:
    out = Output(cfg)
    threads = cfg.n_threads()
    rows, summary = [], {}
    if cfg.table in (1, 3, 5):
        d = {1: 2, 3: 3, 5: 4}[cfg.table]
        for scen in sc.SCENARIOS:
            rep = sc.randomized_study("P1", scen, d, cfg.n, _DESK_N_INI[d], cfg.seed,
                                      threads=threads)
            rows += _report_rows(rep, per_setup=False)
            summary[f"{scen}_mean_delta"] = rep.mean_delta
        out.csv("table.csv", REPORT_COLUMNS, rows)
    elif cfg.table == 2:
        for d in (3, 4):
            for r in sc.delta_sweep(d, sc.DEFAULT_CUTOFFS, cfg.n, _DESK_N_INI[d], cfg.seed,
                                    threads=threads):
                rows += _report_rows(r.report, extra=[r.cutoff], per_setup=False)
                summary[f"d{d}_delta@{r.cutoff:.6f}"] = r.delta
        out.csv("table.csv", REPORT_COLUMNS + ["cutoff"], rows)
    elif cfg.table == 4:
        rep = sc.cglmp_study("P1", 150_000, cfg.seed, threads=threads)
        rows = _report_rows(rep, extra=[rep.extra["I3"]], per_setup=False)
        rows.append(["quantum", "ent", 3, "mean", "", "", "", 0.0, "", "",
                     rep.extra["I3_quantum"]])
        out.csv("table.csv", REPORT_COLUMNS + ["I3"], rows)
        summary = {"mean_delta": rep.mean_delta, "I3": rep.extra["I3"]}
    out.manifest(summary)
    return summary


DISPATCH = {
    "run-random": run_random,
    "run-phi": run_phi,
    "run-cglmp": run_cglmp,
    "sweep-delta": sweep_delta,
    "calibrate-m": calibrate_m,
    "reproduce-table": reproduce_table,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run options (override --config values)")
    g.add_argument("--config", help="INI file of key = value settings")
    g.add_argument("--manifest", help="rerun from a previously written manifest.json")
    g.add_argument("--protocol")
    g.add_argument("--scenario", choices=sc.SCENARIOS)
    g.add_argument("-d", "--dim", dest="d", type=int)
    g.add_argument("-n", "--setups", dest="n", type=int, help="number of input setups")
    g.add_argument("--n-ini", dest="n_ini", type=int, help="shared-randomness samples per setup")
    g.add_argument("--seed", type=int, help=f"master seed (default from ${SEED_ENV} or 0)")
    g.add_argument("--scale", type=_parse_fraction, help="rejection scale M_d")
    g.add_argument("--alpha", type=_parse_fraction, help="weight exponent alpha_d")
    g.add_argument("--cutoff", type=_parse_fraction, help="acceptance cutoff (default 1/2)")
    g.add_argument("--cutoffs", help="comma-separated cutoffs for sweep-delta, e.g. 10/24,1/2")
    g.add_argument("--calib-alpha", dest="calib_alpha", type=float,
                   help="scale inflation factor for calibrate-m (default 10)")
    g.add_argument("--shared-pool", dest="shared_pool", action="store_const", const=True,
                   help="reuse one pool of shared bases across setups")
    g.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    g.add_argument("-o", "--output", help="output directory")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lhvsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run-random", parents=[common], help="randomized TVD study")
    sub.add_parser("run-phi", parents=[common], help="phi-parameterized qutrit PM setup")
    sub.add_parser("run-cglmp", parents=[common], help="CGLMP entanglement setup")
    sub.add_parser("sweep-delta", parents=[common], help="TVD as a function of the cutoff")
    sub.add_parser("calibrate-m", parents=[common], help="check the rejection scale M_d")
    rt = sub.add_parser("reproduce-table", parents=[common], help="desk-scale published table")
    rt.add_argument("table", type=int, choices=sorted(TABLES))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        summary = DISPATCH[cfg.command](cfg)
    except ConfigError as exc:
        print(f"lhvsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (sc.StatisticalFailure, sc.SetupCheckError) as exc:
        print(f"lhvsim: statistical failure: {exc}", file=sys.stderr)
        return EXIT_STATISTICAL
    for k, v in summary.items():
        print(f"{k} = {fmt(v)}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
