"""Command-line experiment runner.

    python3 -m susypt.cli {spectrum,partner,autocorr,limit,verify} [--config PATH] [--out DIR]
        [--seed U64] [--workers K] [--format {csv,json}]

Every output directory receives config.resolved.json, seeds.json and
version.json; all files are deterministic functions of (config, seed).
CSV tables are comma separated with a header row, '%.17g' numbers and LF
line endings; JSON is written with sorted keys.

Input tables:
    window  {kind: table, path: P}  two columns t, f(t); an optional header row;
            linear interpolation, zero outside the grid
    density {kind: table, path: P}  two columns t, rho(t); '#' comments allowed;
            must integrate to 1 within 1e-6
Output tables:
    spectrum.csv          x, V0, psi{n}_sq
    eigenvalues.csv       n, E
    potentials.csv        x, V0, V1
    eigenfunctions.csv    x, psi0_{n}, psi1_{n}
    trace_N{N}.csv        t, re1, im1, re0, im0   (X_N on the time grid)
    samples_N{N}.csv      re1, im1, re0, im0      (X_N at random times)
    haar_samples.csv      re1, im1, re0, im0      (theta pair at Haar points)
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .autocorr import AutocorrConfig, GridTimes, TableDensity, Triangular, Uniform, rescaled_X_batch
from .checks import eigen_residual, gram_defect
from .errors import ConfigError, SingularPartnerError, SusyPTError
from .jacobi_theta import check_gamma, lift_time, theta
from .pt_model import HALF_PI, PTParams, eigenfunction_table, eigenvalue, potential_v0, quadrature_grid
from .stats import (
    EmpiricalLaw,
    chunk_seeds,
    dependence_report,
    ks_distance,
    sample_limit_law,
    sample_time_law,
    tail_report,
)
from .susy_partner import build_first_order, build_second_order
from .windows import GaussianBump, HermiteBasis, Indicator, TableFn

DEFAULT_SEED = 20240607


# --- configuration ---------------------------------------------------------------------


@dataclass
class ModelSection:
    alpha: float = math.sqrt(2)
    beta: float = 4.0


@dataclass
class PartnerSection:
    kind: str = "first"
    eps1: float | None = None
    eps2: float | None = None
    level: int = 0
    n_max: int = 4


@dataclass
class SpectrumSection:
    n_max: int = 4
    points: int = 1001


@dataclass
class WindowsSection:
    f1: dict = field(default_factory=lambda: {"kind": "indicator", "a": 0.0, "b": 1.0})
    f0: dict = field(default_factory=lambda: {"kind": "indicator", "a": 1 / 3, "b": 4 / 3})


@dataclass
class RunSection:
    N: list = field(default_factory=lambda: [10, 40])
    t0: float = 0.0
    t1: float = 1.0
    steps: int = 1001
    count: int = 0
    haar_count: int = 10_000
    time_density: dict = field(default_factory=lambda: {"kind": "uniform", "a": 0.0, "b": 1.0})
    tol: float | None = None
    tail_radii: list = field(default_factory=lambda: [2.0, 2.5, 3.0])
    dependence_R: float = 2.0
    dump_samples: bool = True
    seed: int = DEFAULT_SEED
    chunk: int = 50_000


@dataclass
class OutputSection:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["csv"])


@dataclass
class ExperimentConfig:
    model: ModelSection = field(default_factory=ModelSection)
    partner: PartnerSection = field(default_factory=PartnerSection)
    spectrum: SpectrumSection = field(default_factory=SpectrumSection)
    windows: WindowsSection = field(default_factory=WindowsSection)
    run: RunSection = field(default_factory=RunSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
_TYPES = {
    "float": (int, float),
    "float | None": (int, float, type(None)),
    "int": (int,),
    "str": (str,),
    "bool": (bool,),
    "list": (list,),
    "dict": (dict,),
}


def _line_map(text: str) -> dict:
    """Dotted key path -> 1-based source line, from the YAML node tree."""
    lines: dict = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = f"{path}.{k.value}" if path else str(k.value)
                lines[p] = k.start_mark.line + 1
                walk(v, p)

    walk(yaml.compose(text), "")
    return lines


def _fail(path: str, msg: str, lines: dict):
    where = f" (line {lines[path]})" if path in lines else ""
    raise ConfigError(f"{path}{where}: {msg}")


def parse_config(text: str) -> ExperimentConfig:
    """YAML or JSON text -> ExperimentConfig, or ConfigError naming the field and line."""
    try:
        data = yaml.safe_load(text) or {}
        lines = _line_map(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"malformed config{where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of sections")
    cfg = ExperimentConfig()
    for name, body in data.items():
        if name not in _SECTIONS:
            _fail(name, f"unknown section; expected one of {sorted(_SECTIONS)}", lines)
        if not isinstance(body, dict):
            _fail(name, "section must be a mapping", lines)
        section = getattr(cfg, name)
        known = {f.name: f.type for f in dataclasses.fields(section)}
        for key, value in body.items():
            path = f"{name}.{key}"
            if key not in known:
                _fail(path, f"unknown field; expected one of {sorted(known)}", lines)
            allowed = _TYPES[known[key]]
            if isinstance(value, bool) and bool not in allowed:
                _fail(path, f"expected {known[key]}, got a boolean", lines)
            if not isinstance(value, allowed):
                _fail(path, f"expected {known[key]}, got {type(value).__name__}", lines)
            if known[key] == "float" and value is not None:
                value = float(value)
            setattr(section, key, value)
    _validate(cfg, lines)
    return cfg


def _validate(cfg: ExperimentConfig, lines: dict):
    if not (cfg.model.alpha > 1 and cfg.model.beta > 1):
        _fail("model", "need alpha, beta > 1", lines)
    if cfg.partner.kind not in ("first", "second"):
        _fail("partner.kind", "must be 'first' or 'second'", lines)
    if cfg.run.chunk < 1:
        _fail("run.chunk", "must be >= 1", lines)
    if any(not isinstance(n, int) or isinstance(n, bool) or n < 1 for n in cfg.run.N):
        _fail("run.N", "must be a list of integers >= 1", lines)
    for key in ("f1", "f0"):
        try:
            make_window(getattr(cfg.windows, key))
        except (SusyPTError, KeyError, TypeError, ValueError) as exc:
            _fail(f"windows.{key}", f"bad window spec: {exc}", lines)
    try:
        make_density(cfg.run.time_density)
    except (SusyPTError, KeyError, TypeError, ValueError) as exc:
        _fail("run.time_density", f"bad density spec: {exc}", lines)
    bad = set(cfg.output.formats) - {"csv", "json"}
    if bad:
        _fail("output.formats", f"unknown formats {sorted(bad)}", lines)


def make_window(spec: dict):
    kind = spec["kind"]
    if kind == "indicator":
        return Indicator(float(spec["a"]), float(spec["b"]))
    if kind == "hermite":
        return HermiteBasis(int(spec["k"]))
    if kind == "gaussian":
        return GaussianBump(float(spec["center"]), float(spec["width"]))
    if kind == "table":
        return TableFn.from_csv(spec["path"])
    raise ValueError(f"unknown window kind {kind!r}")


def make_density(spec: dict):
    kind = spec["kind"]
    if kind == "uniform":
        return Uniform(float(spec.get("a", 0.0)), float(spec.get("b", 1.0)))
    if kind == "triangular":
        return Triangular(float(spec.get("a", 0.0)), float(spec.get("b", 2.0)))
    if kind == "table":
        return TableDensity.from_csv(spec["path"])
    raise ValueError(f"unknown density kind {kind!r}")


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return parse_config(Path(path).read_text())


# --- output ------------------------------------------------------------------------------


def _fmt(v) -> str:
    return "%.17g" % v


def write_table(directory: Path, stem: str, columns: dict, formats) -> list[Path]:
    """Write equal-length columns as CSV and/or JSON."""
    out = []
    names = list(columns)
    arrays = [np.asarray(columns[k], dtype=float) for k in names]
    if "csv" in formats:
        p = directory / f"{stem}.csv"
        rows = [",".join(names)]
        rows += [",".join(_fmt(v) for v in row) for row in zip(*arrays)]
        p.write_bytes(("\n".join(rows) + "\n").encode())
        out.append(p)
    if "json" in formats:
        p = directory / f"{stem}.json"
        write_json(p, {k: [float(v) for v in a] for k, a in zip(names, arrays)})
        out.append(p)
    return out


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: Path, obj) -> Path:
    path.write_bytes((json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n").encode())
    return path


@dataclass
class RunContext:
    config: ExperimentConfig
    out: Path
    seed: int
    workers: int
    formats: list
    seeds: dict = field(default_factory=dict)

    def stream_seed(self, name: str, index: int) -> int:
        """Named sub-seed derived from the master seed; recorded in seeds.json."""
        s = int(np.random.SeedSequence([self.seed, index]).generate_state(1, np.uint64)[0])
        self.seeds[name] = {"entropy": [self.seed, index], "seed": s}
        return s

    def finish(self, command: str):
        resolved = self.config.to_dict()
        resolved["run"]["seed"] = self.seed
        resolved["output"]["formats"] = self.formats
        write_json(self.out / "config.resolved.json", resolved)
        write_json(self.out / "seeds.json", {"master": self.seed, "streams": self.seeds})
        write_json(
            self.out / "version.json",
            {"package": "susypt", "version": __version__, "command": command, "numpy": np.__version__},
        )


def _params(cfg: ExperimentConfig) -> PTParams:
    return PTParams(cfg.model.alpha, cfg.model.beta)


def _open_grid(points: int) -> np.ndarray:
    # midpoints never touch the endpoints of (0, pi/2)
    return (np.arange(points) + 0.5) * (HALF_PI / points)


# --- commands ----------------------------------------------------------------------------


def cmd_spectrum(ctx: RunContext) -> list[Path]:
    p = _params(ctx.config)
    sp = ctx.config.spectrum
    x = _open_grid(sp.points)
    psi = eigenfunction_table(p, sp.n_max, x)
    cols = {"x": x, "V0": potential_v0(p, x)}
    cols.update({f"psi{n}_sq": psi[n] ** 2 for n in range(sp.n_max + 1)})
    files = write_table(ctx.out, "spectrum", cols, ctx.formats)
    n = np.arange(sp.n_max + 1)
    files += write_table(ctx.out, "eigenvalues", {"n": n, "E": [eigenvalue(p, k) for k in n]}, ctx.formats)
    return files


def cmd_partner(ctx: RunContext) -> list[Path]:
    p = _params(ctx.config)
    ps = ctx.config.partner
    if ps.kind == "first":
        eps = ps.eps1 if ps.eps1 is not None else eigenvalue(p, 0) - 1.0
        model = build_first_order(p, eps)
    else:
        lo, hi = eigenvalue(p, ps.level), eigenvalue(p, ps.level + 1)
        e1 = ps.eps1 if ps.eps1 is not None else lo + 0.6 * (hi - lo)
        e2 = ps.eps2 if ps.eps2 is not None else lo + 0.4 * (hi - lo)
        model = build_second_order(p, e1, e2, ps.level)
    x = _open_grid(ctx.config.spectrum.points)
    files = write_table(ctx.out, "potentials", {"x": x, "V0": potential_v0(p, x), "V1": model.potential_v1(x)}, ctx.formats)
    psi0 = eigenfunction_table(p, ps.n_max, x)
    cols = {"x": x}
    cols.update({f"psi0_{n}": psi0[n] for n in range(ps.n_max + 1)})
    cols.update({f"psi1_{n}": model.eigenfunction(n, x) for n in range(ps.n_max + 1)})
    files += write_table(ctx.out, "eigenfunctions", cols, ctx.formats)
    xq, wq = quadrature_grid()
    table1 = np.array([model.eigenfunction(n, xq) for n in range(ps.n_max + 1)])
    report = {
        "kind": ps.kind,
        "spec": model.spec.__dict__ | {"kind": ps.kind},
        "alpha": p.alpha,
        "beta": p.beta,
        "residual_base": [eigen_residual(lambda t, n=n: eigenfunction_table(p, n, t)[n], lambda t: potential_v0(p, t), eigenvalue(p, n)) for n in range(ps.n_max + 1)],
        "residual_partner": [eigen_residual(lambda t, n=n: model.eigenfunction(n, t), model.potential_v1, eigenvalue(p, n)) for n in range(ps.n_max + 1)],
        "gram_defect_partner": gram_defect(table1, wq),
    }
    files.append(write_json(ctx.out / "partner_report.json", report))
    return files


def _autocorr_cfg(ctx: RunContext, N: int, params: PTParams | None = None) -> AutocorrConfig:
    w = ctx.config.windows
    return AutocorrConfig(params or _params(ctx.config), make_window(w.f1), make_window(w.f0), N)


def cmd_autocorr(ctx: RunContext) -> list[Path]:
    run = ctx.config.run
    p = _params(ctx.config)
    check_gamma(p.gamma)
    t = GridTimes(run.t0, run.t1, run.steps).times()
    files, meta = [], {"lift_check": {}}
    for i, N in enumerate(run.N):
        cfg = _autocorr_cfg(ctx, N)
        x1, x0 = rescaled_X_batch(cfg, t)
        files += write_table(
            ctx.out, f"trace_N{N}", {"t": t, "re1": x1.real, "im1": x1.imag, "re0": x0.real, "im0": x0.imag}, ctx.formats
        )
        # spot check of X_N(t) = Theta_f(lifted point) at a few grid times
        idx = np.linspace(0, t.size - 1, min(5, t.size)).astype(int)
        err = max(
            max(abs(x1[k] - theta(cfg.f1, lift_time(t[k], N, p.gamma))), abs(x0[k] - theta(cfg.f0, lift_time(t[k], N, p.gamma))))
            for k in idx
        )
        meta["lift_check"][str(N)] = {"max_abs_error": float(err), "times": [float(t[k]) for k in idx]}
        if run.count > 0:
            seed = ctx.stream_seed(f"times_N{N}", 100 + i)
            law = sample_time_law(cfg, make_density(run.time_density), run.count, seed, workers=ctx.workers, chunk=run.chunk)
            files += _dump_law(ctx, f"samples_N{N}", law)
    files.append(write_json(ctx.out / "autocorr_meta.json", meta))
    return files


def _dump_law(ctx: RunContext, stem: str, law: EmpiricalLaw) -> list[Path]:
    s = law.samples
    return write_table(
        ctx.out, stem, {"re1": s[:, 0].real, "im1": s[:, 0].imag, "re0": s[:, 1].real, "im0": s[:, 1].imag}, ctx.formats
    )


def cmd_limit(ctx: RunContext) -> list[Path]:
    run = ctx.config.run
    w = ctx.config.windows
    f1, f0 = make_window(w.f1), make_window(w.f0)
    seed = ctx.stream_seed("haar", 1)
    law = sample_limit_law(f1, f0, run.haar_count, seed, tol=run.tol, workers=ctx.workers, chunk=run.chunk)
    ctx.seeds["haar"]["chunks"] = len(chunk_seeds(seed, run.haar_count, run.chunk))
    files = _dump_law(ctx, "haar_samples", law) if run.dump_samples else []
    tails = {
        "theta1": tail_report(law, f1, run.tail_radii, component=1),
        "theta0": tail_report(law, f0, run.tail_radii, component=0),
    }
    files.append(write_json(ctx.out / "tail_report.json", tails))
    files.append(write_json(ctx.out / "dependence_report.json", dependence_report(law, run.dependence_R)))
    if run.count > 0:
        p = _params(ctx.config)
        check_gamma(p.gamma)
        ks = {}
        for i, N in enumerate(run.N):
            tseed = ctx.stream_seed(f"times_N{N}", 100 + i)
            tlaw = sample_time_law(
                _autocorr_cfg(ctx, N), make_density(run.time_density), run.count, tseed, workers=ctx.workers, chunk=run.chunk
            )
            ks[str(N)] = {fn: ks_distance(tlaw, law, fn) for fn in ("abs1", "abs0", "re1", "im1", "re0", "im0", "abs_sum")}
        files.append(write_json(ctx.out / "ks_report.json", ks))
    files.append(write_json(ctx.out / "law_provenance.json", {"provenance": law.provenance, "seed": law.seed, "count": law.count, "failures": law.failures}))
    return files


def cmd_verify(ctx: RunContext) -> bool:
    from .acceptance import run_all

    results = run_all(workers=ctx.workers)
    write_json(ctx.out / "acceptance.json", results)
    return all(r.passed for r in results)


COMMANDS = {"spectrum": cmd_spectrum, "partner": cmd_partner, "autocorr": cmd_autocorr, "limit": cmd_limit}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="susypt", description="SUSY Poschl-Teller autocorrelation experiments")
    ap.add_argument("command", choices=[*COMMANDS, "verify"])
    ap.add_argument("--config", help="YAML or JSON experiment config")
    ap.add_argument("--out", help="output directory (overrides output.directory)")
    ap.add_argument("--seed", type=int, help="master seed, unsigned 64-bit (overrides run.seed)")
    ap.add_argument("--workers", type=int, default=1, help="worker processes for Monte Carlo work")
    ap.add_argument("--format", choices=["csv", "json"], help="table format (overrides output.formats)")
    return ap


def run(command: str, config: ExperimentConfig, out: Path, seed: int, workers: int = 1, formats=None):
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    out.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(config, out, seed, workers, list(formats or config.output.formats))
    result = cmd_verify(ctx) if command == "verify" else COMMANDS[command](ctx)
    ctx.finish(command)
    return result


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.run.seed
        out = Path(args.out or cfg.output.directory)
        result = run(args.command, cfg, out, seed, args.workers, [args.format] if args.format else None)
    except SingularPartnerError as exc:
        print(f"error: {exc} (x_zero = {exc.x_zero})", file=sys.stderr)
        return 2
    except SusyPTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "verify":
        return 0 if result else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
