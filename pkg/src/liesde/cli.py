"""Command-line front end.

Usage::

    liesde <command> [--config run.json] [--key=value ...]

Commands: ``rbm``, ``langevin``, ``lie-poisson``, ``gibbs-oracle``,
``compare`` and ``check``. Every :class:`RunConfig` field can come from the
JSON file or a flag; flags win. Outputs go to ``--output_dir`` (default
``$LIESDE_OUTPUT_DIR`` or the working directory).

Exit codes: 0 success, 1 diagnostic failure, 2 configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from liesde import __version__
from liesde.algebra import AlgebraDescriptor, AlgebraElement, Family, OrthonormalBasis, build_basis
from liesde.checks import run_checks, summarise
from liesde.diagnostics import (
    GibbsOracleConfig,
    MomentReport,
    compare_to_oracle,
    conservation_monitors,
    default_observables,
    gibbs_oracle_samples,
    spectrum_drift,
)
from liesde.group import group_defect_array, identity, rbm_path
from liesde.langevin import LangevinConfig, TrajectoryRecord, Variant, simulate, simulate_ensemble
from liesde.mechanics import Hamiltonian, InertiaOperator, Potential, lie_poisson_path
from liesde.rng import RngStream

EXIT_OK, EXIT_DIAGNOSTIC, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
OUTPUT_ENV = "LIESDE_OUTPUT_DIR"
COMMANDS = ("rbm", "langevin", "lie-poisson", "gibbs-oracle", "check", "compare")
HIST_BINS = 50
HIST_RANGE = (-1.0, 3.0)


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    group: str = "so3"
    potential: dict = field(default_factory=lambda: {"kind": "zero"})
    variant: str = "momentum"
    beta: float = 1.0
    gamma: float = 1.0
    gamma1: float | None = None
    gamma2: float | None = None
    h: float = 1e-3
    T: float = 10.0
    seed: int = 0
    stream_id: int = 0
    record_every: int = 10
    reproject_every: int = 100
    m0: list | None = None
    inertia: list | None = None
    noise_scale: float = 0.0
    n_samples: int = 100_000
    n_traj: int = 1
    workers: int = 1
    burn_in: float = 0.2
    oracle_beta: float | None = None
    check_groups: list | None = None
    output_dir: str | None = None
    output: str | None = None
    format: str = "csv"
    plot: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def canonical_json(self) -> str:
        """Config as canonical JSON, without output locations (these do not affect results)."""
        d = self.to_dict()
        for k in ("output_dir", "output", "plot", "workers"):
            d.pop(k)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    @property
    def descriptor(self) -> AlgebraDescriptor:
        return AlgebraDescriptor.parse(self.group)

    def langevin(self) -> LangevinConfig:
        return LangevinConfig(Variant(self.variant), self.beta, self.gamma, self.gamma1, self.gamma2, self.h,
                              self.T, self.seed, self.stream_id, self.record_every, self.reproject_every)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_FLOAT = {"beta", "gamma", "gamma1", "gamma2", "h", "T", "noise_scale", "burn_in", "oracle_beta"}
_INT = {"seed", "stream_id", "record_every", "reproject_every", "n_samples", "n_traj", "workers"}
_STR = {"command", "group", "variant", "output_dir", "output", "format"}
_JSON = {"potential", "m0", "inertia", "check_groups"}


def _coerce(key: str, value: Any, from_flag: bool) -> Any:
    if key not in _FIELDS:
        raise ConfigError(f"unknown key {key!r}")
    try:
        if value is None:
            if key in ("gamma1", "gamma2", "oracle_beta", "m0", "inertia", "check_groups", "output_dir", "output"):
                return None
            raise ConfigError(f"key {key!r} cannot be null")
        if key in _FLOAT:
            if isinstance(value, bool):
                raise ValueError
            out = float(value)
            if not math.isfinite(out):
                raise ValueError
            return out
        if key in _INT:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if key == "plot":
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.lower() in ("1", "true", "yes", "0", "false", "no"):
                return value.lower() in ("1", "true", "yes")
            raise ValueError
        if key in _STR:
            if not isinstance(value, str):
                raise ValueError
            return value
        if from_flag and isinstance(value, str):
            value = json.loads(value)
        return value
    except ConfigError:
        raise
    except (TypeError, ValueError, json.JSONDecodeError):
        raise ConfigError(f"invalid value for {key!r}: {value!r}") from None


def _validate(cfg: RunConfig) -> RunConfig:
    if cfg.command not in COMMANDS:
        raise ConfigError(f"invalid value for 'command': {cfg.command!r} (choose from {', '.join(COMMANDS)})")
    try:
        desc = AlgebraDescriptor.parse(cfg.group)
    except ValueError as exc:
        raise ConfigError(f"invalid value for 'group': {exc}") from None
    if cfg.variant not in {v.value for v in Variant}:
        raise ConfigError(f"invalid value for 'variant': {cfg.variant!r}")
    if cfg.format not in ("csv", "jsonl"):
        raise ConfigError(f"invalid value for 'format': {cfg.format!r}")
    try:
        cfg.langevin()
    except ValueError as exc:
        msg = str(exc)
        key = re.match(r"\w+", msg).group(0)
        raise ConfigError(f"invalid value for {key!r}: {msg}") from None
    for key in ("n_samples", "n_traj", "workers"):
        if getattr(cfg, key) < 1:
            raise ConfigError(f"invalid value for {key!r}: must be >= 1")
    if not 0 <= cfg.burn_in < 1:
        raise ConfigError("invalid value for 'burn_in': must lie in [0, 1)")
    if cfg.oracle_beta is not None and not cfg.oracle_beta > 0:
        raise ConfigError("invalid value for 'oracle_beta': must be positive")
    if cfg.noise_scale < 0:
        raise ConfigError("invalid value for 'noise_scale': must be non-negative")
    if cfg.m0 is not None and (not isinstance(cfg.m0, list) or len(cfg.m0) != desc.dimension):
        raise ConfigError(f"invalid value for 'm0': need a list of {desc.dimension} coefficients")
    if cfg.inertia is not None:
        try:
            InertiaOperator(tuple(cfg.inertia))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for 'inertia': {exc}") from None
        if len(cfg.inertia) != desc.dimension:
            raise ConfigError(f"invalid value for 'inertia': need {desc.dimension} coefficients")
    if cfg.check_groups is not None:
        for g in cfg.check_groups:
            try:
                AlgebraDescriptor.parse(g)
            except ValueError as exc:
                raise ConfigError(f"invalid value for 'check_groups': {exc}") from None
    build_potential(cfg)
    return cfg


def build_potential(cfg: RunConfig) -> Potential:
    spec = cfg.potential
    desc = AlgebraDescriptor.parse(cfg.group)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("invalid value for 'potential': expected an object with a 'kind'")
    allowed = {"zero": {"kind"}, "trace": {"kind", "A", "A_file"}, "quadratic": {"kind", "k"}}
    kind = spec["kind"]
    if kind not in allowed:
        raise ConfigError(f"invalid value for 'potential.kind': {kind!r}")
    extra = set(spec) - allowed[kind]
    if extra:
        raise ConfigError(f"unknown key 'potential.{sorted(extra)[0]}'")
    try:
        if kind == "zero":
            return Potential.zero(desc)
        if kind == "quadratic":
            return Potential.quadratic(spec.get("k", 1.0), desc)
        if "A_file" in spec:
            path = Path(spec["A_file"])
            if not path.is_file():
                raise ConfigError(f"invalid value for 'potential.A_file': no such file {str(path)!r}")
            A = _load_matrix(path)
        else:
            A = spec.get("A", np.eye(desc.ambient_size).tolist())
        return Potential.trace(_complex_matrix(A), desc)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value for 'potential': {exc}") from None


def _complex_matrix(A):
    """Nested lists; complex entries may be written as ``[re, im]`` pairs."""
    arr = np.array(A, dtype=object)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        arr = arr.astype(float)
        return arr[..., 0] + 1j * arr[..., 1]
    return np.array(A, dtype=float)


def _load_matrix(path: Path):
    if path.suffix == ".json":
        return json.loads(path.read_text())
    return np.loadtxt(path, delimiter="," if path.suffix == ".csv" else None, ndmin=2)


def parse_config(path: str | os.PathLike | None = None, flags: dict | Sequence[str] | None = None,
                 command: str | None = None) -> RunConfig:
    """Build a validated :class:`RunConfig` from a JSON file and/or flags.

    ``flags`` is a mapping or a list of ``--key=value`` / ``--key value``
    tokens; flag values override the file.
    """
    values: dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {str(path)!r}: {exc.strerror}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {str(path)!r}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        for k, v in doc.items():
            values[k] = _coerce(k, v, from_flag=False)
    if flags:
        items = flags.items() if isinstance(flags, dict) else _split_flags(flags)
        for k, v in items:
            values[k] = _coerce(k, v, from_flag=not isinstance(flags, dict))
    if command is not None:
        values["command"] = command
    if "command" not in values:
        raise ConfigError("missing key 'command'")
    return _validate(RunConfig(**values))


def _split_flags(tokens: Sequence[str]):
    out = []
    tokens = list(tokens)
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        body = tok[2:]
        if "=" in body:
            key, value = body.split("=", 1)
        else:
            key = body
            if i + 1 >= len(tokens):
                raise ConfigError(f"missing value for {key!r}")
            value = tokens[i + 1]
            i += 1
        out.append((key.replace("-", "_") if key.replace("-", "_") in _FIELDS else key, value))
        i += 1
    return out


# -- output helpers ----------------------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _matrix_columns(prefix: str, shape, complex_: bool) -> list[str]:
    if len(shape) == 1:
        names = [f"{prefix}_{i}" for i in range(shape[0])]
    else:
        names = [f"{prefix}_{i}{j}" for i in range(shape[0]) for j in range(shape[1])]
    if complex_:
        return [f"{n}_{part}" for n in names for part in ("re", "im")]
    return names


def _matrix_values(x: np.ndarray, complex_: bool) -> list[float]:
    flat = np.asarray(x).ravel()
    if complex_:
        return [v for z in flat for v in (z.real, z.imag)]
    return list(np.real(flat))


class _Writer:
    """Writes rows as CSV (with a ``#`` header line) or JSON lines."""

    def __init__(self, path: Path, columns: list[str], fmt: str, config_hash: str | None):
        self.path = path
        self.columns = columns
        self.fmt = fmt
        self.buf = io.StringIO()
        if fmt == "csv":
            if config_hash:
                self.buf.write(f"# config_sha256={config_hash}\n")
            self.buf.write(",".join(columns) + "\n")
        self.hash = config_hash

    def row(self, values):
        if self.fmt == "csv":
            self.buf.write(",".join(v if isinstance(v, str) else _fmt(v) for v in values) + "\n")
        else:
            rec = {c: (v if isinstance(v, str) else float(v)) for c, v in zip(self.columns, values)}
            if self.hash:
                rec = {"config_sha256": self.hash, **rec}
            self.buf.write(json.dumps(rec) + "\n")

    def close(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(self.buf.getvalue())


def write_trajectory(record: TrajectoryRecord, path: Path, fmt: str = "csv", config_hash: str | None = None):
    """Trajectory table: ``t``, ``g`` entries (row-major), ``m_1..m_d``, energy, casimir, defect."""
    cplx = record.descriptor.family is Family.SU
    d = len(record.basis)
    cols = ["t"] + _matrix_columns("g", record.descriptor.element_shape, cplx)
    cols += [f"m_{i + 1}" for i in range(d)] + ["energy", "casimir", "defect"]
    w = _Writer(path, cols, fmt, config_hash)
    for i in range(len(record)):
        w.row([record.times[i], *_matrix_values(record.g[i], cplx), *record.m_coefficients[i],
               record.energy[i], record.casimir[i], record.defect[i]])
    w.close()


def emit_plot_data(data, path: str | os.PathLike) -> Path:
    """Write plot-ready CSV.

    * ``TrajectoryRecord``: long format ``t,series,value`` for energy,
      casimir and defect.
    * ``{name: (t, values)}``: long format over the given series.
    * ``(t, values)``: two columns ``t,value``.
    * list of :class:`MomentReport`: one row per observable.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    if isinstance(data, TrajectoryRecord):
        data = {"energy": (data.times, data.energy), "casimir": (data.times, data.casimir),
                "defect": (data.times, data.defect)}
    if isinstance(data, tuple) and len(data) == 2:
        wr.writerow(["t", "value"])
        for t, v in zip(*data):
            wr.writerow([_fmt(t), _fmt(v)])
    elif isinstance(data, dict):
        wr.writerow(["t", "series", "value"])
        for name, (ts, vs) in data.items():
            for t, v in zip(ts, vs):
                wr.writerow([_fmt(t), name, _fmt(v)])
    elif isinstance(data, list) and all(isinstance(r, MomentReport) for r in data):
        cols = ["name", "ergodic_mean", "ergodic_se", "oracle_mean", "oracle_se", "z", "passed"]
        wr.writerow(cols)
        for r in data:
            row = r.to_dict()
            wr.writerow([row["name"]] + [_fmt(row[c]) for c in cols[1:-1]] + [str(row["passed"]).lower()])
    else:
        raise TypeError(f"cannot emit plot data for {type(data).__name__}")
    path.write_text(buf.getvalue())
    return path


def emit_histogram(values, path: str | os.PathLike, bins: int = HIST_BINS,
                   value_range: tuple[float, float] = HIST_RANGE) -> Path:
    """Binned counts ``bin_left,bin_right,count``; defaults suit SO(3) traces."""
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, range=value_range)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["bin_left,bin_right,count"]
    lines += [f"{_fmt(a)},{_fmt(b)},{int(c)}" for a, b, c in zip(edges[:-1], edges[1:], counts)]
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_json(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o).__name__)


def _finite(x):
    return None if isinstance(x, float) and not math.isfinite(x) else x


# -- commands ---------------------------------------------------------------------------


def _out_dir(cfg: RunConfig) -> Path:
    return Path(cfg.output_dir or os.environ.get(OUTPUT_ENV) or ".")


def _stem(cfg: RunConfig) -> str:
    return cfg.output or cfg.command


def _ext(cfg: RunConfig) -> str:
    return "csv" if cfg.format == "csv" else "jsonl"


def _m0(cfg: RunConfig, basis: OrthonormalBasis, default=None) -> AlgebraElement:
    coeffs = cfg.m0 if cfg.m0 is not None else default
    if coeffs is None:
        return AlgebraElement.zero(basis.descriptor)
    return AlgebraElement(basis.combine(np.asarray(coeffs, dtype=float)), basis.descriptor)


def _report(cfg: RunConfig, body: dict) -> dict:
    return {"command": cfg.command, "config": cfg.to_dict(), "config_sha256": cfg.sha256(),
            "liesde_version": __version__, **body}


def _cmd_rbm(cfg: RunConfig, log) -> int:
    desc = cfg.descriptor
    basis = build_basis(desc)
    path = rbm_path(identity(desc), cfg.T, cfg.h, RngStream(cfg.seed, cfg.stream_id), basis,
                    cfg.record_every, cfg.reproject_every)
    cplx = desc.family is Family.SU
    cols = ["t"] + _matrix_columns("g", desc.element_shape, cplx) + ["defect"]
    out = _out_dir(cfg) / f"{_stem(cfg)}.{_ext(cfg)}"
    w = _Writer(out, cols, cfg.format, cfg.sha256())
    for t, g in path:
        w.row([t, *_matrix_values(g.matrix, cplx), group_defect_array(g.matrix, desc)])
    w.close()
    log(f"wrote {out} ({len(path)} rows)")
    if cfg.plot and desc.family is not Family.RN:
        tr = [float(np.real(np.trace(g.matrix))) for _, g in path]
        emit_plot_data((np.array([t for t, _ in path]), tr), _out_dir(cfg) / f"{_stem(cfg)}_trace_plot.csv")
    return EXIT_OK


def _cmd_langevin(cfg: RunConfig, log) -> int:
    desc = cfg.descriptor
    basis = build_basis(desc)
    V = build_potential(cfg)
    rec = simulate(cfg.langevin(), desc, V, m0=_m0(cfg, basis), basis=basis)
    out = _out_dir(cfg) / f"{_stem(cfg)}.{_ext(cfg)}"
    write_trajectory(rec, out, cfg.format, cfg.sha256())
    report = conservation_monitors(rec)
    _write_json(_report(cfg, {"conservation": report.to_dict()}), _out_dir(cfg) / f"{_stem(cfg)}_report.json")
    if cfg.plot:
        emit_plot_data(rec, _out_dir(cfg) / f"{_stem(cfg)}_plot.csv")
    log(f"wrote {out}; max defect {report.defect_max:.2e}")
    return EXIT_OK if report.passed else EXIT_DIAGNOSTIC


def _cmd_lie_poisson(cfg: RunConfig, log) -> int:
    desc = cfg.descriptor
    if desc.family is Family.RN:
        raise ConfigError("invalid value for 'group': Lie-Poisson flows need a non-abelian algebra")
    basis = build_basis(desc)
    inertia = InertiaOperator(tuple(cfg.inertia)) if cfg.inertia is not None else None
    H = Hamiltonian(Potential.zero(desc), inertia)
    m0 = _m0(cfg, basis, default=np.linspace(1.0, 0.2, len(basis)))
    noise = [cfg.noise_scale * x for x in basis.elements] if cfg.noise_scale > 0 else None
    n = LangevinConfig(h=cfg.h, T=cfg.T).n_steps
    ms = lie_poisson_path(H, m0, cfg.h, n, noise=noise, rng=RngStream(cfg.seed, cfg.stream_id), basis=basis,
                          record_every=cfg.record_every)
    times = cfg.h * cfg.record_every * np.arange(len(ms))
    coeffs = basis.coefficients(ms)
    energy = H.energy_array(np.broadcast_to(identity(desc).matrix, ms.shape), ms, basis)
    casimir = basis.pair(ms, ms)
    drift = spectrum_drift(ms)
    out = _out_dir(cfg) / f"{_stem(cfg)}.{_ext(cfg)}"
    cols = ["t"] + [f"m_{i + 1}" for i in range(len(basis))] + ["energy", "casimir", "spectrum_drift"]
    w = _Writer(out, cols, cfg.format, cfg.sha256())
    for i in range(len(ms)):
        w.row([times[i], *coeffs[i], energy[i], casimir[i], drift[i]])
    w.close()
    body = {
        "spectrum_drift_max": float(drift.max()),
        "casimir_drift_max": float(np.max(np.abs(casimir - casimir[0]))),
        "energy_drift_max": float(np.max(np.abs(energy - energy[0]))),
        "stochastic": noise is not None,
    }
    _write_json(_report(cfg, body), _out_dir(cfg) / f"{_stem(cfg)}_report.json")
    log(f"wrote {out}; spectrum drift {body['spectrum_drift_max']:.2e}")
    return EXIT_OK


def _oracle(cfg: RunConfig, basis: OrthonormalBasis, V: Potential, beta: float):
    rng = RngStream(cfg.seed, cfg.stream_id + 1_000_003)
    return gibbs_oracle_samples(rng, GibbsOracleConfig(beta, V, cfg.n_samples), basis)


def _cmd_gibbs_oracle(cfg: RunConfig, log) -> int:
    desc = cfg.descriptor
    if not desc.is_compact:
        raise ConfigError("invalid value for 'group': the Gibbs oracle needs a compact group")
    basis = build_basis(desc)
    V = build_potential(cfg)
    g, m = gibbs_oracle_samples(RngStream(cfg.seed, cfg.stream_id),
                                GibbsOracleConfig(cfg.beta, V, cfg.n_samples), basis)
    cplx = desc.family is Family.SU
    coeffs = basis.coefficients(m)
    energy = 0.5 * basis.pair(m, m) + V.value_array(g)
    cols = ["index"] + _matrix_columns("g", desc.element_shape, cplx)
    cols += [f"m_{i + 1}" for i in range(len(basis))] + ["energy"]
    out = _out_dir(cfg) / f"{_stem(cfg)}.{_ext(cfg)}"
    w = _Writer(out, cols, cfg.format, cfg.sha256())
    for i in range(len(g)):
        w.row([i, *_matrix_values(g[i], cplx), *coeffs[i], energy[i]])
    w.close()
    if cfg.plot and desc.family is Family.SO and desc.ambient_size == 3:
        emit_histogram(np.trace(g, axis1=1, axis2=2), _out_dir(cfg) / f"{_stem(cfg)}_trace_hist.csv")
    log(f"wrote {out} ({len(g)} samples)")
    return EXIT_OK


def _cmd_compare(cfg: RunConfig, log) -> int:
    desc = cfg.descriptor
    if not desc.is_compact:
        raise ConfigError("invalid value for 'group': compare needs a compact group")
    basis = build_basis(desc)
    V = build_potential(cfg)
    lcfg = cfg.langevin()
    trajs = simulate_ensemble(lcfg, desc, V, n_traj=cfg.n_traj, workers=cfg.workers, basis=basis,
                              inits=[(identity(desc), _m0(cfg, basis))] * cfg.n_traj)
    oracle_beta = cfg.beta if cfg.oracle_beta is None else cfg.oracle_beta
    A = V.A if V.kind == "trace" else None
    reports = compare_to_oracle(trajs, default_observables(basis, A), _oracle(cfg, basis, V, oracle_beta),
                                cfg.burn_in)
    passed = all(r.passed for r in reports)
    body = {
        "passed": passed,
        "oracle_beta": oracle_beta,
        "reports": [{k: _finite(v) for k, v in r.to_dict().items()} for r in reports],
    }
    _write_json(_report(cfg, body), _out_dir(cfg) / f"{_stem(cfg)}.json")
    if cfg.plot:
        emit_plot_data(reports, _out_dir(cfg) / f"{_stem(cfg)}_plot.csv")
    for r in reports:
        status = "ok  " if r.passed else "FAIL"
        log(f"{status} {r.name:<14} ergodic {r.ergodic_mean:+.5f} +- {r.ergodic_se:.5f}  "
            f"oracle {r.oracle_mean:+.5f} +- {r.oracle_se:.5f}  z={r.z:.2f}")
    return EXIT_OK if passed else EXIT_DIAGNOSTIC


def _cmd_check(cfg: RunConfig, log) -> int:
    kw = {"groups": tuple(cfg.check_groups)} if cfg.check_groups else {}
    results = run_checks(seed=cfg.seed, **kw)
    summary = summarise(results)
    for name, row in summary["groups"].items():
        status = "ok  " if row["passed"] else "FAIL"
        cells = " ".join(f"{a}={v}" for a, v in row["algebras"].items())
        log(f"{status} {name:<30} tol={row['tolerance']:.0e}  {cells}")
    log(f"{summary['n_groups']} property groups, {'all passed' if summary['passed'] else 'FAILURES'}")
    _write_json(_report(cfg, {"summary": summary, "results": [r.to_dict() for r in results]}),
                _out_dir(cfg) / f"{_stem(cfg)}.json")
    return EXIT_OK if summary["passed"] else EXIT_DIAGNOSTIC


_DISPATCH = {
    "rbm": _cmd_rbm,
    "langevin": _cmd_langevin,
    "lie-poisson": _cmd_lie_poisson,
    "gibbs-oracle": _cmd_gibbs_oracle,
    "compare": _cmd_compare,
    "check": _cmd_check,
}


def run(cfg: RunConfig, log=print) -> int:
    """Execute a validated config; returns the exit status."""
    try:
        return _DISPATCH[cfg.command](cfg, log)
    except ConfigError as exc:
        log(f"config error: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        log(f"I/O error: {exc}")
        return EXIT_IO


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="liesde",
        description="Stochastic dynamics on reductive matrix Lie groups.",
        epilog="Any config key can be given as --key=value; flags override --config.",
        allow_abbrev=False,
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--version", action="version", version=f"liesde {__version__}")
    args, rest = parser.parse_known_args(argv)
    try:
        cfg = parse_config(args.config, rest, command=args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, log=lambda s: print(s, flush=True))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
