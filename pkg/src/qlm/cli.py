"""Command-line front end.

    qlm qle   --config FILE [--beta X] [--mass X] [--order N] [--out DIR]
    qlm adm   --config FILE [--out DIR]
    qlm embed --config FILE [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import kernels
from .adm import EXTRINSIC_CURVATURE_CONVENTION, SliceData, adm_energy_momentum
from .dsl import MetricSource, ParseError, parse_metric
from .embedding import EmbeddingError
from .grid import SphereGrid
from .quasilocal import (DEFAULT_RADII, ENERGY_FLOOR, NonConvergenceError,
                         Observer, RegimeError, SurfaceFamily, extrapolate,
                         mean_curvature_deficit, minimize_over_observers,
                         momentum_integrals, qle_finite, qle_limit_integrand)
from .spacetime import (DomainError, SignatureError, minkowski,
                        schwarzschild_isotropic)
from .surface import GeometryError

__all__ = ["ConfigError", "RunConfig", "load_config", "run_qle", "run_adm",
           "run_embed", "main"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

SCENARIOS = ("minkowski", "schwarzschild", "boosted-schwarzschild",
             "custom-dsl")
QLE_COLUMNS = ("a1", "a2", "a3", "r0", "E_finite", "E_thm1", "e_integrand",
               "p1", "p2", "p3")
PROBE_OBSERVERS = ((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, 0.0, -1.0),
                   (3 ** -0.5,) * 3)

CONVENTIONS = {
    "signature": "(-,+,+,+), geometric units G=c=1",
    "tau": "tau = -<X, T0>, T0 = (sqrt(1+|a|^2), a)",
    "reference_mean_curvature": "outward normal, round sphere H0 = 2/r0",
    "embedding_gauge": "v(pi/2) = 0",
    "surface_domain": "theta in [0, pi], phi in [0, 2pi)",
    "extrinsic_curvature": EXTRINSIC_CURVATURE_CONVENTION,
    "extrapolation": "least squares c0 + c1/r + c2/r^2; limit = c0",
}

NUMERIC_ERRORS = (ArithmeticError, DomainError, SignatureError,
                  np.linalg.LinAlgError)


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "boosted-schwarzschild"
    mass: float = 1.0
    beta: float = 0.0
    radii: tuple = DEFAULT_RADII
    order: int = 64
    nphi: int = 4
    observers: tuple = ((0.0, 0.0, 0.0),)
    out: str = None
    rtol: float = 1e-6
    atol: float = 1e-12
    energy_floor: float = ENERGY_FLOOR
    workers: int = 1
    metric: dict = None
    metric_params: dict = field(default_factory=dict)
    slice_beta: float = None

    @property
    def gamma(self):
        return 1.0 / math.sqrt(1.0 - self.beta ** 2)

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError("scenario", f"must be one of {', '.join(SCENARIOS)}")
        _finite("mass", self.mass)
        if self.mass < 0:
            raise ConfigError("mass", "must be >= 0")
        _finite("beta", self.beta)
        if not abs(self.beta) < 1:
            raise ConfigError("beta", "|beta| must be < 1")
        if self.scenario == "schwarzschild" and self.beta != 0:
            raise ConfigError("beta", "scenario 'schwarzschild' is unboosted; "
                              "use 'boosted-schwarzschild'")
        r = np.asarray(self.radii, dtype=float)
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ConfigError("radii", "radii must be positive and finite")
        if len(self.radii) < 3:
            raise ConfigError("radii", "need at least 3 radii")
        if np.any(np.diff(r) <= 0):
            raise ConfigError("radii", "radii must be strictly increasing")
        if not 16 <= self.order <= 512:
            raise ConfigError("order", "quadrature order must lie in [16, 512]")
        if self.nphi < 4 or self.nphi % 2:
            raise ConfigError("phi_order", "must be even and >= 4")
        if not self.observers:
            raise ConfigError("observers", "need at least one observer")
        for a in self.observers:
            if len(a) != 3 or not all(math.isfinite(x) for x in a):
                raise ConfigError("observers", f"not a finite 3-vector: {a!r}")
        for name in ("rtol", "atol", "energy_floor"):
            val = getattr(self, name)
            _finite(f"tolerances.{name}", val)
            if val < 0:
                raise ConfigError(f"tolerances.{name}", "must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        if self.scenario == "custom-dsl" and not self.metric:
            raise ConfigError("metric", "scenario 'custom-dsl' needs a [metric] "
                              "section")
        if self.slice_beta is not None:
            _finite("slice.beta", self.slice_beta)
            if not abs(self.slice_beta) < 1:
                raise ConfigError("slice.beta", "|beta| must be < 1")
        return self

    def build_metric(self):
        if self.scenario == "minkowski":
            return minkowski()
        if self.scenario in ("schwarzschild", "boosted-schwarzschild"):
            return schwarzschild_isotropic(self.mass)
        try:
            src = MetricSource.from_mapping(self.metric, self.metric_params)
            return parse_metric(src)
        except ParseError as exc:
            raise ConfigError(f"metric.{_component_key(exc.context)}", str(exc))
        except ValueError as exc:
            raise ConfigError("metric", str(exc))

    def family(self):
        return SurfaceFamily(self.build_metric(), self.beta, self.order,
                             self.nphi)


def _finite(name, val):
    if not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(name, f"must be a finite number, got {val!r}")


def _component_key(context):
    return (context or "").replace("component ", "") or "?"


def _number(data, key, default, kind=float):
    val = data.get(key, default)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(key, f"expected a number, got {val!r}")
    if kind is int:
        if int(val) != val:
            raise ConfigError(key, f"expected an integer, got {val!r}")
        return int(val)
    return float(val)


def _radii(data):
    if "radii" in data and "ladder" in data:
        raise ConfigError("radii", "give either 'radii' or [ladder], not both")
    if "ladder" in data:
        lad = data["ladder"]
        start = _number(lad, "start", None)
        ratio = _number(lad, "ratio", 2.0)
        count = _number(lad, "count", 4, int)
        if start is None:
            raise ConfigError("ladder.start", "missing")
        if ratio <= 1:
            raise ConfigError("ladder.ratio", "must be > 1")
        return tuple(start * ratio ** k for k in range(count))
    val = data.get("radii", DEFAULT_RADII)
    if not isinstance(val, (list, tuple)):
        raise ConfigError("radii", "expected a list of numbers")
    out = []
    for x in val:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError("radii", f"expected numbers, got {x!r}")
        out.append(float(x))
    return tuple(out)


def _observers(data):
    val = data.get("observers", [[0.0, 0.0, 0.0]])
    if not isinstance(val, list) or not val:
        raise ConfigError("observers", "expected a non-empty list of 3-vectors")
    out = []
    for a in val:
        if (not isinstance(a, list) or len(a) != 3
                or any(isinstance(x, bool) or not isinstance(x, (int, float))
                       for x in a)):
            raise ConfigError("observers", f"not a 3-vector: {a!r}")
        out.append(tuple(float(x) for x in a))
    return tuple(out)


_KNOWN_KEYS = {"scenario", "mass", "beta", "radii", "ladder", "order",
               "phi_order", "observers", "out", "tolerances", "workers",
               "metric", "slice"}


def config_from_mapping(data, base_dir=None):
    """Build and validate a :class:`RunConfig` from parsed TOML."""
    unknown = sorted(set(data) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    tol = data.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("tolerances", "expected a table")
    metric, params = None, {}
    if "metric" in data:
        sec = dict(data["metric"])
        params = sec.pop("params", {})
        if not isinstance(params, dict):
            raise ConfigError("metric.params", "expected a table")
        for k, v in params.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"metric.params.{k}", "expected a number")
        for k, v in sec.items():
            if not isinstance(v, (str, int, float)) or isinstance(v, bool):
                raise ConfigError(f"metric.{k}", "expected an expression string")
        metric = {k: str(v) for k, v in sec.items()}
    slice_beta = None
    if "slice" in data:
        sl = data["slice"]
        if not isinstance(sl, dict):
            raise ConfigError("slice", "expected a table")
        slice_beta = _number(sl, "beta", data.get("beta", 0.0))
    out = data.get("out")
    if out is not None:
        if not isinstance(out, str):
            raise ConfigError("out", "expected a path string")
        if base_dir is not None and not Path(out).is_absolute():
            out = str(Path(base_dir) / out)
    scenario = data.get("scenario", "boosted-schwarzschild")
    if not isinstance(scenario, str):
        raise ConfigError("scenario", "expected a string")
    cfg = RunConfig(
        scenario=scenario,
        mass=_number(data, "mass", 0.0 if scenario == "minkowski" else 1.0),
        beta=_number(data, "beta", 0.0),
        radii=_radii(data),
        order=_number(data, "order", 64, int),
        nphi=_number(data, "phi_order", 4, int),
        observers=_observers(data),
        out=out,
        rtol=_number(tol, "rtol", 1e-6),
        atol=_number(tol, "atol", 1e-12),
        energy_floor=_number(tol, "energy_floor", ENERGY_FLOOR),
        workers=_number(data, "workers", 1, int),
        metric=metric,
        metric_params={k: float(v) for k, v in params.items()},
        slice_beta=slice_beta,
    )
    return cfg.validate()


def load_config(path, **overrides):
    """Read a TOML config file; non-``None`` keyword overrides replace file
    values (``beta``, ``mass``, ``order``, ``out``)."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"invalid TOML: {exc}")
    for key, val in overrides.items():
        if val is not None:
            data[key] = val
    if overrides.get("out") is not None:
        data["out"] = str(Path(overrides["out"]).resolve())
    return config_from_mapping(data, base_dir=path.parent)


def _clean(x):
    """JSON-safe copy: NaN/inf become ``None``, numpy scalars become floats."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_clean(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def _fit_record(fit):
    return {"limit": fit.limit, "residual": fit.residual,
            "tolerance": fit.tolerance,
            "status": "converged" if fit.converged else "non-converged"}


def _config_record(cfg):
    rec = {"scenario": cfg.scenario, "mass": cfg.mass, "beta": cfg.beta,
           "gamma": cfg.gamma, "radii": list(cfg.radii), "order": cfg.order,
           "phi_order": cfg.nphi, "observers": [list(a) for a in cfg.observers],
           "tolerances": {"rtol": cfg.rtol, "atol": cfg.atol,
                          "energy_floor": cfg.energy_floor},
           "kernel_backend": kernels.BACKEND}
    if cfg.metric:
        rec["metric"] = cfg.metric
        rec["metric_params"] = cfg.metric_params
    return rec


def _write_csv(path, columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(x)) for x in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def _write_json(path, record):
    text = json.dumps(_clean(record), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _out_dir(cfg):
    if cfg.out is None:
        return None
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _qle_rows(cfg, family):
    observers = [Observer(a) for a in cfg.observers]

    def at_radius(geo, emb):
        e = mean_curvature_deficit(geo, emb)
        p = momentum_integrals(geo, emb)
        return [(qle_finite(geo, emb, obs), qle_limit_integrand(geo, emb, obs))
                for obs in observers], e, p

    return observers, family.map(at_radius, cfg.radii, cfg.workers)


def run_qle(cfg):
    """Per-radius quasilocal energies, their limits and the four-vector.

    Returns ``(summary, csv_text)``; files are written when ``cfg.out`` is set.
    """
    family = cfg.family()
    observers, per_radius = _qle_rows(cfg, family)
    rows = []
    for k, obs in enumerate(observers):
        for r0, (energies, e, p) in zip(cfg.radii, per_radius):
            rows.append((*obs.a, r0, energies[k][0], energies[k][1], e, *p))

    e_vals = np.array([row[1] for row in per_radius])
    p_vals = np.array([row[2] for row in per_radius])
    e_fit = extrapolate(cfg.radii, e_vals, cfg.rtol, cfg.atol)
    scale = max(abs(e_fit.limit), float(np.max(np.abs(p_vals))))
    p_fits = [extrapolate(cfg.radii, p_vals[:, i], cfg.rtol, cfg.atol, scale)
              for i in range(3)]
    e, p = e_fit.limit, [f.limit for f in p_fits]
    minimization = {"m": None, "a_min": None}
    if e <= max(cfg.energy_floor, e_fit.tolerance):
        minimization["status"] = "energy vanishes within tolerance"
    else:
        try:
            m, a_min = minimize_over_observers(e, p)
            minimization = {"m": m, "a_min": list(a_min), "status": "ok"}
        except ValueError as exc:
            minimization["status"] = str(exc)

    limits = []
    for k, obs in enumerate(observers):
        fin = [row[0][k][0] for row in per_radius]
        limit_vals = [row[0][k][1] for row in per_radius]
        fin_fit = extrapolate(cfg.radii, fin, cfg.rtol, cfg.atol)
        limit_fit = extrapolate(cfg.radii, limit_vals, cfg.rtol, cfg.atol)
        limits.append({"a": list(obs.a), "E_finite": _fit_record(fin_fit),
                       "E_thm1": _fit_record(limit_fit)})

    fits = [e_fit, *p_fits] + [
        extrapolate(cfg.radii, [row[0][k][j] for row in per_radius],
                    cfg.rtol, cfg.atol)
        for k in range(len(observers)) for j in (0, 1)]
    summary = {
        "command": "qle",
        "config": _config_record(cfg),
        "limits": limits,
        "energy_momentum": {
            "e": _fit_record(e_fit),
            **{f"p{i + 1}": _fit_record(f) for i, f in enumerate(p_fits)},
            **minimization,
        },
        "converged": all(f.converged for f in fits),
        "conventions": CONVENTIONS,
    }
    out = _out_dir(cfg)
    text = _write_csv(out / "qle.csv" if out else None, QLE_COLUMNS, rows)
    _write_json(out / "qle_summary.json" if out else None, summary)
    return summary, text


def slice_data(cfg):
    """Slice data for the ADM computation, or :class:`ConfigError` when the
    scenario does not determine one."""
    if cfg.scenario == "custom-dsl":
        if cfg.slice_beta is None:
            raise ConfigError("slice", "scenario 'custom-dsl' needs a [slice] "
                              "section for ADM slice data")
        return SliceData(cfg.build_metric(), cfg.slice_beta)
    beta = cfg.beta if cfg.slice_beta is None else cfg.slice_beta
    return SliceData(cfg.build_metric(), beta)


def run_adm(cfg):
    """ADM energy-momentum plus observer-linearity residuals against a paired
    quasilocal run on the same slice. Returns ``(summary, csv_text)``."""
    data = slice_data(cfg)
    if cfg.scenario == "custom-dsl" or cfg.slice_beta is not None:
        cfg = replace(cfg, beta=data.beta)
    grid = SphereGrid(cfg.order, cfg.nphi)
    adm = adm_energy_momentum(data, cfg.radii, grid, rtol=cfg.rtol)
    rows = [(r0, E, *P) for r0, E, P in zip(cfg.radii, adm.E_r, adm.P_r)]

    probes = cfg.observers if len(cfg.observers) > 1 else PROBE_OBSERVERS
    qcfg = replace(cfg, observers=tuple(probes))
    observers, per_radius = _qle_rows(qcfg, qcfg.family())
    residuals = []
    for k, obs in enumerate(observers):
        fit = extrapolate(cfg.radii, [row[0][k][0] for row in per_radius],
                          cfg.rtol, cfg.atol)
        a = np.array(obs.a)
        pred = math.sqrt(1.0 + a @ a) * adm.E + float(a @ np.array(adm.P))
        residuals.append({"a": list(obs.a), "qle_limit": _fit_record(fit),
                          "adm_prediction": pred,
                          "residual": abs(fit.limit - pred)})
    summary = {
        "command": "adm",
        "config": _config_record(cfg),
        "slice_beta": data.beta,
        "E": _fit_record(adm.fits["E"]),
        **{f"P{i}": _fit_record(adm.fits[f"P{i}"]) for i in (1, 2, 3)},
        "future_timelike": adm.future_timelike,
        "linearity_residuals": residuals,
        "converged": all(f.converged for f in adm.fits.values()),
        "conventions": CONVENTIONS,
    }
    out = _out_dir(cfg)
    text = _write_csv(out / "adm.csv" if out else None,
                      ("r0", "E", "P1", "P2", "P3"), rows)
    _write_json(out / "adm_summary.json" if out else None, summary)
    return summary, text


def run_embed(cfg):
    """Reference embedding profiles ``u, v, H0`` on the θ nodes per radius."""
    family = cfg.family()
    prof = family.map(lambda geo, emb: emb, cfg.radii, cfg.workers)
    rows = []
    for r0, emb in zip(cfg.radii, prof):
        for k in range(emb.grid.order):
            rows.append((r0, emb.theta[k], emb.u[k], emb.v[k], emb.H0[k]))
    out = _out_dir(cfg)
    return _write_csv(out / "embed.csv" if out else None,
                      ("r0", "theta", "u", "v", "H0"), rows)


def _parser():
    p = argparse.ArgumentParser(
        prog="qlm", description="Quasilocal energy-momentum at spatial "
        "infinity and ADM cross-checks.")
    sub = p.add_subparsers(dest="command", required=True)
    q = sub.add_parser("qle", help="quasilocal energy ladder and limits")
    q.add_argument("--config", required=True)
    q.add_argument("--beta", type=float)
    q.add_argument("--mass", type=float)
    q.add_argument("--order", type=int)
    q.add_argument("--out")
    a = sub.add_parser("adm", help="ADM energy-momentum and cross-check")
    a.add_argument("--config", required=True)
    a.add_argument("--out")
    e = sub.add_parser("embed", help="dump reference embedding profiles")
    e.add_argument("--config", required=True)
    e.add_argument("--out")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    overrides = {"out": args.out}
    if args.command == "qle":
        overrides.update(beta=args.beta, mass=args.mass, order=args.order)
    try:
        cfg = load_config(args.config, **overrides)
        cfg.build_metric()
        if args.command == "adm":
            slice_data(cfg)
    except ConfigError as exc:
        print(f"qlm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "qle":
            summary, _ = run_qle(cfg)
        elif args.command == "adm":
            summary, _ = run_adm(cfg)
        else:
            text = run_embed(cfg)
            if cfg.out is None:
                sys.stdout.write(text)
            return EXIT_OK
    except (GeometryError, EmbeddingError, RegimeError,
            NonConvergenceError) as exc:
        print(f"qlm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NUMERIC_ERRORS as exc:
        print(f"qlm: numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERIC
    sys.stdout.write(_write_json(None, summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
