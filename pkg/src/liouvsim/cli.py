"""Command-line front end: spectra, trajectories, sweeps, tables, exports.

Subcommands map one-to-one onto the library layers: ``spectrum`` emits
eigenvalue data, ``dynamics`` emits observable trajectories with an
oscillation report, ``scaling`` sweeps the symmetry-breaking strength
and fits gap exponents, ``darkstates`` prints the maximal-exponent
table, and ``branching`` lists one level of Young's lattice with its
dimension identities.

Every run resolves to a flat sectioned config (key=value text) that
round-trips losslessly and is embedded in JSON outputs, so a result
file names the exact inputs that produced it.  All emitted data is
deterministic: identical config, identical bytes.  Rates are quoted in
units of gamma and times in 1/gamma throughout.

Exit codes: 0 success, 2 config error, 3 size-cap error, 4 numerical
failure.
"""

import argparse
import configparser
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import dynamics as dyn
from . import fockspace as fs
from . import liouville as lv
from . import spectra
from .darkmodes import max_exponent_table, format_exponent_table
from .errors import ConfigError, DimensionCapError, NumericalError
from .perturbation import scaling_sweep
from .young import check_branching_sum, hook_dim, lattice_level, restrict
from .darkmodes import tower_coefficients

CSV_VERSION = "v1"

_SECTIONS = {
    "run": ("subcommand",),
    "model": ("model", "length", "particles", "gamma", "delta", "s",
              "boundary", "sites", "U"),
    "initial": ("init", "init_file", "levels"),
    "grid": ("grid", "tmin", "tmax", "points", "method"),
    "sweep": ("f_list", "s_grid", "workers", "fmax", "n", "rows", "cols"),
    "output": ("out", "format"),
}

_INT_TUPLES = ("levels", "f_list")
_INTS = ("length", "particles", "sites", "points", "workers", "fmax",
         "n", "rows", "cols")
_FLOATS = ("gamma", "delta", "s", "U", "tmin", "tmax")


@dataclass(frozen=True)
class RunConfig:
    """Fully-resolved run description; round-trips through config text."""

    subcommand: str
    model: str = "fermion"
    length: int = 8
    particles: int = 4
    gamma: float = 1.0
    delta: float = 0.2
    s: float = 0.0
    boundary: str = "obc"
    sites: int = 6
    U: float = 1.0
    init: str = ""
    init_file: str = ""
    levels: tuple = ()
    grid: str = "log"
    tmin: float = 0.0
    tmax: float = 1000.0
    points: int = 1025
    method: str = ""
    f_list: tuple = ()
    s_grid: str = "0.01:0.1:8"
    workers: int = 1
    fmax: int = 6
    n: int = 8
    rows: int = 0
    cols: int = 0
    out: str = ""
    format: str = ""

    def to_text(self) -> str:
        parser = configparser.ConfigParser()
        values = asdict(self)
        for section, keys in _SECTIONS.items():
            parser[section] = {}
            for key in keys:
                value = values[key]
                if key in _INT_TUPLES:
                    parser[section][key] = ",".join(str(v) for v in value)
                elif isinstance(value, float):
                    parser[section][key] = repr(value)
                else:
                    parser[section][key] = str(value)
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser()
        parser.read_string(text)
        kwargs = {}
        for section, keys in _SECTIONS.items():
            if not parser.has_section(section):
                continue
            for key in keys:
                if not parser.has_option(section, key):
                    continue
                raw = parser.get(section, key)
                kwargs[key] = _coerce(key, raw)
        if "subcommand" not in kwargs:
            raise ConfigError("config text has no [run] subcommand")
        return cls(**kwargs)


def _coerce(key: str, raw: str):
    raw = raw.strip()
    if key in _INT_TUPLES:
        return tuple(int(v) for v in raw.split(",") if v.strip())
    if key in _INTS:
        return int(raw)
    if key in _FLOATS:
        return float(raw)
    return raw


def _parse_s_grid(text: str) -> list:
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError:
        raise ConfigError(
            f"--s-grid wants start:stop:count, got {text!r}"
        ) from None
    if not 0 < start < stop or count < 2:
        raise ConfigError("s grid needs 0 < start < stop and count >= 2")
    return list(np.logspace(np.log10(start), np.log10(stop), count))


# --- argument parsing --------------------------------------------------------


def _add_model_flags(sub):
    sub.add_argument("--model", choices=["fermion", "spin"])
    sub.add_argument("--length", type=int, help="fermion lattice sites L")
    sub.add_argument("--particles", type=int, help="fermion number N")
    sub.add_argument("--gamma", type=float, help="dissipation rate (units)")
    sub.add_argument("--delta", type=float, help="tilt Delta in gamma units")
    sub.add_argument("--s", type=float, help="symmetry-breaking strength")
    sub.add_argument("--boundary", choices=["obc", "pbc"])
    sub.add_argument("--sites", type=int, help="spin ring size")
    sub.add_argument("--U", type=float, help="spin interaction in gamma units")


def _add_output_flags(sub, formats):
    sub.add_argument("--config", help="config file; flags override it")
    sub.add_argument("--out", help="output path prefix (default: stdout)")
    sub.add_argument("--format", choices=formats)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liouvsim",
        description="Dissipative lattice Liouvillians: spectra, dynamics, "
        "gap scaling, dark-state tables.",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    spectrum = subparsers.add_parser(
        "spectrum", help="eigenvalues of the Liouvillian, sector-tagged"
    )
    _add_model_flags(spectrum)
    _add_output_flags(spectrum, ["csv", "json"])

    dynamics = subparsers.add_parser(
        "dynamics", help="observable trajectory plus oscillation report"
    )
    _add_model_flags(dynamics)
    _add_output_flags(dynamics, ["csv", "json"])
    dynamics.add_argument("--init", choices=["uniform", "darkpairs", "file"])
    dynamics.add_argument("--init-file", dest="init_file",
                          help=".npy density matrix for --init file")
    dynamics.add_argument("--levels", help="dark levels, e.g. 2,3,4,5")
    dynamics.add_argument("--tmin", type=float)
    dynamics.add_argument("--tmax", type=float)
    dynamics.add_argument("--grid", choices=["log", "linear"])
    dynamics.add_argument("--points", type=int, help="linear grid size")
    dynamics.add_argument("--method",
                          choices=["auto", "spectral", "stepping"])

    scaling = subparsers.add_parser(
        "scaling", help="gap vs s sweep with power-law exponent fits"
    )
    _add_model_flags(scaling)
    _add_output_flags(scaling, ["csv", "json"])
    scaling.add_argument("--f", dest="f_list",
                         help="charge magnitudes to sweep, e.g. 1,2,3")
    scaling.add_argument("--s-grid", dest="s_grid",
                         help="log grid start:stop:count")
    scaling.add_argument("--method", choices=["perturbative", "exact"])
    scaling.add_argument("--workers", type=int,
                         help="parallel sweep processes (0 = all cores)")

    darkstates = subparsers.add_parser(
        "darkstates", help="maximal-exponent table of dark-state pairs"
    )
    darkstates.add_argument("--length", type=int)
    darkstates.add_argument("--fmax", type=int)
    _add_output_flags(darkstates, ["md", "csv", "json"])

    branching = subparsers.add_parser(
        "branching", help="one level of Young's lattice with dimensions"
    )
    branching.add_argument("--n", type=int, help="boxes in each partition")
    branching.add_argument("--rows", type=int, help="max rows (N)")
    branching.add_argument("--cols", type=int, help="max columns (L - N)")
    _add_output_flags(branching, ["md", "json"])
    return parser


def resolve_config(argv) -> RunConfig:
    """defaults <- config file <- explicit flags (flags win)."""
    args = build_parser().parse_args(argv)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                config = RunConfig.from_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        config = replace(config, subcommand=args.subcommand)
    else:
        config = RunConfig(subcommand=args.subcommand)
    updates = {}
    for key, value in vars(args).items():
        if key in ("config", "subcommand") or value is None:
            continue
        if key in _INT_TUPLES:
            value = tuple(int(v) for v in str(value).split(",") if v.strip())
        updates[key] = value
    config = replace(config, **updates)
    if config.gamma <= 0:
        raise ConfigError(f"gamma must be positive, got {config.gamma}")
    if config.grid == "log" and config.tmin <= 0:
        config = replace(config, tmin=0.1)
    if not config.format:
        default = "md" if config.subcommand in ("darkstates", "branching") \
            else "csv"
        config = replace(config, format=default)
    return config


# --- output plumbing ----------------------------------------------------------


def _units_header(config: RunConfig, kind: str) -> str:
    return (
        f"# liouvsim {kind} csv {CSV_VERSION}; rates in units of gamma "
        f"(gamma={config.gamma!r}); times in 1/gamma\n"
    )


def _config_echo(config: RunConfig) -> dict:
    return {
        section: {key: asdict(config)[key] for key in keys}
        for section, keys in _SECTIONS.items()
    }


def _emit(config: RunConfig, pieces: dict) -> int:
    """Write {suffix: text} under the out prefix, or to stdout."""
    if config.out:
        for suffix, text in pieces.items():
            path = f"{config.out}.{suffix}"
            with open(path, "w") as fh:
                fh.write(text)
            print(path)
    else:
        order = [s for s in ("csv", "md", "json", "gp") if s in pieces]
        for suffix in order:
            sys.stdout.write(pieces[suffix])
    return 0


def _scatter_plot_script(csv_name: str) -> str:
    return "\n".join([
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 'Re lambda (gamma)'",
        "set ylabel 'Im lambda (gamma)'",
        f"plot '{csv_name}' using 1:2 with points pt 7 ps 0.5",
    ]) + "\n"


# --- subcommands ---------------------------------------------------------------


def _build_superoperator(config: RunConfig):
    if config.model == "spin":
        params = lv.SpinModelParams(config.sites, config.U, config.gamma)
        return lv.build_spin_liouvillian(params), None
    boundary = fs.PERIODIC if config.boundary == "pbc" else fs.OPEN
    params = lv.FermionModelParams(
        fs.LatticeSpec(config.length, config.particles, boundary),
        config.gamma, config.delta, config.s,
    )
    superop, _ = lv.build_fermion_liouvillian(params)
    basis = fs.build_basis(params.spec)
    return superop, basis


def cmd_spectrum(config: RunConfig) -> int:
    superop, _ = _build_superoperator(config)
    if config.model == "fermion" and config.s != 0.0:
        result = spectra.eig_full(superop)
    else:
        result = spectra.eig_sectorwise(superop.sectors)
    if config.format == "json":
        meta = {"config": _config_echo(config),
                "units": "rates in gamma; times in 1/gamma"}
        return _emit(config, {"json": spectra.spectrum_to_json(result, meta)})
    csv_name = f"{os.path.basename(config.out) or 'spectrum'}.csv"
    return _emit(config, {
        "csv": _units_header(config, "spectrum") + spectra.spectrum_to_csv(result),
        "gp": _scatter_plot_script(csv_name),
    })


def _initial_state(config: RunConfig, basis) -> dyn.InitialState:
    init = config.init
    if not init:
        init = "darkpairs" if config.model == "spin" else "uniform"
    if init == "file":
        if not config.init_file:
            raise ConfigError("--init file needs --init-file PATH")
        try:
            density = np.load(config.init_file)
        except OSError as exc:
            raise ConfigError(f"cannot read density file: {exc}") from None
        return dyn.prepare_initial("custom", density=density)
    if config.model == "spin":
        d = 2 ** config.sites
        psi = np.zeros(d, dtype=complex)
        if init == "uniform":
            psi[:] = 1.0 / np.sqrt(d)
        else:  # darkpairs: all-up plus one flip on site 1, both dark
            psi[d - 1] = psi[d - 2] = 1.0 / np.sqrt(2.0)
        return dyn.prepare_initial("custom", density=np.outer(psi, psi.conj()))
    levels = config.levels or None
    return dyn.prepare_initial(init, basis, levels=levels)


def cmd_dynamics(config: RunConfig) -> int:
    superop, basis = _build_superoperator(config)
    state = _initial_state(config, basis)
    if config.grid == "linear":
        if config.points < 16:
            raise ConfigError("linear grid needs --points >= 16")
        times = np.linspace(config.tmin, config.tmax, config.points)
    else:
        times = dyn.log_time_grid(config.tmin, config.tmax)
    if config.model == "spin":
        observables = {"sx1": dyn.spin_x_observable(config.sites, 1)}
        main, delta_eff = "sx1", 2.0 * config.U
    else:
        i = min(2, config.length - 1)
        observables = {
            f"bond{i}{i + 1}": dyn.bond_correlator(basis, i, i + 1),
            "excitation": dyn.excitation_offset(basis),
        }
        main, delta_eff = f"bond{i}{i + 1}", config.delta
        if state.kind == "dark_pair_superposition":
            observables.update(dyn.FamilyWeights(basis).observables())
    traj = dyn.propagate(superop, state.density, times,
                         observables, method=config.method or "auto")
    report = None
    skipped = None
    if config.grid != "linear":
        skipped = "oscillation report needs --grid linear"
    elif delta_eff <= 0:
        skipped = "oscillation report needs a nonzero rotation rate"
    else:
        span = 4 * 2 * np.pi / delta_eff
        lo = max(float(times[0]), float(times[-1]) - span)
        rep = dyn.oscillation_report(
            traj.times, traj.series[main], (lo, float(times[-1])),
            delta=delta_eff,
        )
        report = {k: v for k, v in asdict(rep).items()}
    payload = {
        "config": _config_echo(config),
        "units": "rates in gamma; times in 1/gamma",
        "route": traj.meta.get("route"),
        "invariants": {
            "trace_dev": traj.trace_dev,
            "herm_dev": traj.herm_dev,
            "min_eig": traj.min_eig,
        },
        "main_observable": main,
        "report": report,
        "report_skipped": skipped,
    }
    json_text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if config.format == "json":
        payload["series"] = {
            "t": [float(t) for t in traj.times],
            **{k: list(map(float, v)) for k, v in sorted(traj.series.items())},
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        return _emit(config, {"json": text})
    csv_name = f"{os.path.basename(config.out) or 'dynamics'}.csv"
    return _emit(config, {
        "csv": _units_header(config, "dynamics") + dyn.trajectory_to_csv(traj),
        "json": json_text,
        "gp": dyn.plot_script(traj, csv_name, logx=config.grid == "log"),
    })


def _scaling_task(payload: tuple) -> dict:
    (L, N, gamma, delta, boundary, f, s_values, method) = payload
    spec = fs.LatticeSpec(L, N, fs.PERIODIC if boundary == "pbc" else fs.OPEN)
    params = lv.FermionModelParams(spec, gamma, delta, 0.0)
    rows = [r for r in max_exponent_table(L, f, n_values=[N]) if r.f_abs == f]
    if not rows:
        raise ConfigError(
            f"no dark-state pair with |f|={f} at L={L}, N={N}"
        )
    witness = rows[0].pairs[0]
    fit = scaling_sweep(witness.d1, witness.d2, params,
                        s_grid=s_values, method=method)
    return {
        "f": f,
        "p_hat": fit.fit.p_hat,
        "p_predicted": rows[0].p_m,
        "stderr": fit.fit.stderr,
        "rms_residual": fit.fit.rms_residual,
        "n_used": fit.fit.n_used,
        "window": list(fit.fit.window),
        "excluded": list(fit.excluded),
        "samples": [[s, gap, shift] for s, gap, shift in fit.samples],
        "method": fit.method,
    }


def cmd_scaling(config: RunConfig) -> int:
    if config.model == "spin":
        raise ConfigError("scaling sweeps apply to the fermion model")
    if not config.f_list:
        raise ConfigError("pass --f with at least one charge magnitude")
    s_values = _parse_s_grid(config.s_grid)
    method = config.method or "perturbative"
    if method not in ("perturbative", "exact"):
        raise ConfigError(f"unknown sweep method {method!r}")
    tasks = [
        (config.length, config.particles, config.gamma, config.delta,
         config.boundary, f, s_values, method)
        for f in sorted(set(config.f_list))
    ]
    workers = config.workers if config.workers > 0 else (os.cpu_count() or 1)
    if workers == 1 or len(tasks) == 1:
        results = [_scaling_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(_scaling_task, tasks))
    results.sort(key=lambda r: r["f"])
    if config.format == "json":
        payload = {
            "config": _config_echo(config),
            "units": "rates in gamma",
            "fits": [{k: v for k, v in r.items() if k != "samples"}
                     for r in results],
            "samples": {str(r["f"]): r["samples"] for r in results},
        }
        return _emit(
            config, {"json": json.dumps(payload, indent=2, sort_keys=True) + "\n"}
        )
    lines = ["s,f,gap,shift,method"]
    for r in results:
        for s, gap, shift in r["samples"]:
            lines.append(f"{s!r},{r['f']},{gap!r},{shift!r},{r['method']}")
    fit_lines = json.dumps(
        {"config": _config_echo(config),
         "fits": [{k: v for k, v in r.items() if k != "samples"}
                  for r in results]},
        indent=2, sort_keys=True,
    ) + "\n"
    csv_name = f"{os.path.basename(config.out) or 'scaling'}.csv"
    plot = "\n".join([
        "set datafile separator ','",
        "set logscale xy",
        "set xlabel 's (gamma units)'",
        "set ylabel 'gap (gamma units)'",
        f"plot '{csv_name}' using 1:3 with points pt 7",
    ]) + "\n"
    return _emit(config, {
        "csv": _units_header(config, "scaling") + "\n".join(lines) + "\n",
        "json": fit_lines,
        "gp": plot,
    })


def cmd_darkstates(config: RunConfig) -> int:
    rows = max_exponent_table(config.length, config.fmax)
    if config.format == "json":
        payload = {
            "config": _config_echo(config),
            "rows": [
                {
                    "f_abs": r.f_abs,
                    "N": r.N,
                    "p_m": r.p_m,
                    "pairs": [
                        {"d1": pr.d1.label(), "d2": pr.d2.label(),
                         "lN": pr.d1.lN, "lL": pr.d1.lL, "l": pr.l, "p": pr.p}
                        for pr in r.pairs
                    ],
                }
                for r in rows
            ],
        }
        return _emit(
            config, {"json": json.dumps(payload, indent=2, sort_keys=True) + "\n"}
        )
    style = "csv" if config.format == "csv" else "markdown"
    text = format_exponent_table(rows, style=style)
    if style == "csv":
        text = _units_header(config, "darkstates") + text
    return _emit(config, {config.format: text})


def cmd_branching(config: RunConfig) -> int:
    max_rows = config.rows or None
    max_cols = config.cols or None
    level = lattice_level(config.n, max_rows=max_rows, max_cols=max_cols)
    coeffs = None
    if max_rows and max_cols:
        basis = fs.build_basis(fs.LatticeSpec(max_rows + max_cols, max_rows))
        coeffs = tower_coefficients(basis, config.n)
    entries = []
    for p in level:
        induct_lhs, induct_rhs = check_branching_sum(p)
        entry = {
            "partition": list(p),
            "dim": hook_dim(p),
            "restrict_sum": sum(hook_dim(q) for q in restrict(p)),
            "induce_sum": [induct_lhs, induct_rhs],
        }
        if coeffs is not None:
            coeff = float(coeffs.get(tuple(p), 0.0))
            entry["tower_coefficient"] = coeff
            entry["matches_dim"] = bool(abs(coeff - hook_dim(p)) < 1e-9)
        entries.append(entry)
    if config.format == "json":
        payload = {"config": _config_echo(config), "level": config.n,
                   "entries": entries}
        return _emit(
            config, {"json": json.dumps(payload, indent=2, sort_keys=True) + "\n"}
        )
    head = "| partition | dim | sum over restrict | n*dim = induce sum |"
    cols = 4
    if coeffs is not None:
        head += " tower coeff | = dim |"
        cols = 6
    lines = [head, "| " + " --- |" * cols]
    for e in entries:
        row = (
            f"| {tuple(e['partition'])} | {e['dim']} | {e['restrict_sum']} "
            f"| {e['induce_sum'][0]} = {e['induce_sum'][1]} |"
        )
        if coeffs is not None:
            row += f" {e['tower_coefficient']:g} | {e['matches_dim']} |"
        lines.append(row)
    return _emit(config, {"md": "\n".join(lines) + "\n"})


DISPATCH = {
    "spectrum": cmd_spectrum,
    "dynamics": cmd_dynamics,
    "scaling": cmd_scaling,
    "darkstates": cmd_darkstates,
    "branching": cmd_branching,
}


def main(argv=None) -> int:
    try:
        config = resolve_config(argv)
        return DISPATCH[config.subcommand](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DimensionCapError as exc:
        print(f"size cap: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
