"""Command-line front end.

Every run is described by a JSON config with a strict schema; flags only
pick the config file, override the seed, choose the output directory and the
thread count.  Outputs are a CSV and a JSON summary per subcommand, written
byte-identically for identical (config, seed).

Exit status: 0 success, 1 computation error, 2 config error.
"""

from __future__ import annotations

import argparse
import copy
import difflib
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .consistency import ROUTES, CertificationSetup, RouteInapplicableError, certify, importance_map
from .distributions import (
    BinaryDensitySpec,
    Family,
    from_config,
    normal_family,
)
from .estimator import SolverConfig, lower_envelope_estimate, upper_envelope_estimate
from .experiments import (
    BEAM_ROUTES,
    DEFAULT_SUBFAMILY,
    BeamParams,
    EnvelopeSetup,
    bias_sweep,
    beam_certification_setup,
    beam_convergence,
    beam_oracle,
    beam_safe_indicator,
    failure_threshold,
    finite_subfamily_check,
    naive_bias_sweep,
    quadrature_envelope,
    run_beam_example,
    run_no_consistency_example,
)
from .reporting import write_csv, write_json
from .sampling import BACKENDS, derive_seed

__all__ = ["ConfigError", "RunConfig", "parse_config", "dispatch", "main", "SUBCOMMANDS"]

SUBCOMMANDS = ("estimate", "bias-sweep", "consistency-check", "example-beam",
               "example-no-consistency")

# common misnamings -> schema key
ALIASES = {
    "samples": "n", "num_samples": "n", "n_samples": "n", "sample_size": "n",
    "reps": "replications", "n_reps": "replications", "repetitions": "replications",
    "random_seed": "seed", "rng_seed": "seed",
    "sizes": "n_grid", "ns": "n_grid",
    "grid": "grid_points_per_dim", "grid_points": "grid_points_per_dim",
    "method": "backend", "sampler": "backend",
    "function": "f", "integrand": "f",
    "proposal": "central",
}


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending field path."""


# ---------------------------------------------------------------------------
# schema helpers


def _unknown(keys, allowed, path):
    for k in keys:
        if k in allowed:
            continue
        hint = ALIASES.get(k) if ALIASES.get(k) in allowed else None
        if hint is None:
            close = difflib.get_close_matches(k, list(allowed), n=1)
            hint = close[0] if close else None
        where = f"{path}.{k}" if path else k
        msg = f"{where}: unknown key"
        if hint:
            msg += f"; did you mean {hint!r}?"
        raise ConfigError(msg)


def _obj(v, path):
    if not isinstance(v, dict):
        raise ConfigError(f"{path}: expected an object")
    return v


def _int(v, path, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}: must be >= {lo}")
    return v


def _num(v, path, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}: expected a finite number")
    if positive and v <= 0:
        raise ConfigError(f"{path}: must be > 0")
    return float(v)


def _bool(v, path):
    if not isinstance(v, bool):
        raise ConfigError(f"{path}: expected true or false")
    return v


def _int_list(v, path, lo=1):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{path}: expected a non-empty list of integers")
    return [_int(x, f"{path}[{i}]", lo) for i, x in enumerate(v)]


def _choice(v, path, options):
    if v not in options:
        raise ConfigError(f"{path}: must be one of {list(options)}")
    return v


def _seed(v, path):
    return _int(v, path, 0)


# ---------------------------------------------------------------------------
# function specs

F_KINDS = ("indicator_above", "indicator_g_positive", "constant", "identity", "polynomial")


@dataclass
class FunctionSpec:
    """A named built-in integrand with what the checks need to know about it."""

    fn: object
    breakpoints: tuple
    bound: float
    smooth: bool


def _function(rec, path, beam: BeamParams | None = None) -> FunctionSpec:
    rec = _obj(rec, path)
    kind = _choice(rec.get("kind"), f"{path}.kind", F_KINDS)
    if kind == "indicator_above":
        _unknown(rec, {"kind", "threshold"}, path)
        c = _num(rec.get("threshold", 0.0), f"{path}.threshold")
        return FunctionSpec(lambda x: (np.asarray(x, dtype=np.float64) > c).astype(np.float64),
                            (c,), 1.0, False)
    if kind == "indicator_g_positive":
        _unknown(rec, {"kind"}, path)
        params = beam or BeamParams()
        xs = failure_threshold(params)
        return FunctionSpec(beam_safe_indicator(params), (xs,) if math.isfinite(xs) else (),
                            1.0, False)
    if kind == "constant":
        _unknown(rec, {"kind", "value"}, path)
        c = _num(rec.get("value", 1.0), f"{path}.value")
        return FunctionSpec(lambda x: np.full(np.shape(x), c), (), abs(c), True)
    if kind == "identity":
        _unknown(rec, {"kind"}, path)
        return FunctionSpec(lambda x: np.asarray(x, dtype=np.float64), (), math.inf, True)
    _unknown(rec, {"kind", "coefficients"}, path)
    coef = rec.get("coefficients")
    if not isinstance(coef, list) or not coef:
        raise ConfigError(f"{path}.coefficients: expected a non-empty list (constant term first)")
    cs = [_num(c, f"{path}.coefficients[{i}]") for i, c in enumerate(coef)]
    poly = np.polynomial.Polynomial(cs)
    bound = abs(cs[0]) if all(c == 0 for c in cs[1:]) else math.inf
    return FunctionSpec(lambda x: poly(np.asarray(x, dtype=np.float64)), (), bound, True)


# ---------------------------------------------------------------------------
# distributions and families


def _distribution(rec, path):
    rec = _obj(rec, path)
    allowed = {"normal": {"kind", "mu", "sigma"}, "uniform": {"kind", "a", "b"},
               "binary": {"kind", "k", "bits"}}
    kind = _choice(rec.get("kind"), f"{path}.kind", tuple(allowed))
    _unknown(rec, allowed[kind], path)
    try:
        return from_config(rec)
    except (ValueError, TypeError, KeyError) as e:
        raise ConfigError(f"{path}: {e}") from None


def _pair_or_num(v, path, positive=False):
    if isinstance(v, list):
        if len(v) != 2:
            raise ConfigError(f"{path}: expected a number or a [lower, upper] pair")
        lo, hi = (_num(x, f"{path}[{i}]", positive) for i, x in enumerate(v))
        if lo > hi:
            raise ConfigError(f"{path}: lower bound exceeds upper bound")
        return (lo, hi)
    return _num(v, path, positive)


def _family(rec, path) -> Family:
    rec = _obj(rec, path)
    kind = _choice(rec.get("kind"), f"{path}.kind", ("normal", "finite"))
    if kind == "normal":
        _unknown(rec, {"kind", "mu", "sigma", "norm"}, path)
        mu = _pair_or_num(rec.get("mu", 0.0), f"{path}.mu")
        sigma = _pair_or_num(rec.get("sigma", 1.0), f"{path}.sigma", positive=True)
        norm = _choice(rec.get("norm", "euclidean"), f"{path}.norm", ("euclidean", "max"))
        return normal_family(mu, sigma, norm)
    _unknown(rec, {"kind", "members"}, path)
    members = rec.get("members")
    if not isinstance(members, list) or not members:
        raise ConfigError(f"{path}.members: expected a non-empty list of distributions")
    return Family.finite([_distribution(m, f"{path}.members[{i}]")
                          for i, m in enumerate(members)])


def _solver(rec, path, default: SolverConfig) -> SolverConfig:
    rec = _obj(rec, path)
    _unknown(rec, {"grid_points_per_dim", "refine", "refine_iters"}, path)
    return SolverConfig(
        grid_points_per_dim=_int(rec.get("grid_points_per_dim", default.grid_points_per_dim),
                                 f"{path}.grid_points_per_dim", 2),
        refine=_bool(rec.get("refine", default.refine), f"{path}.refine"),
        refine_iters=_int(rec.get("refine_iters", default.refine_iters),
                          f"{path}.refine_iters", 0),
    )


def _beam(rec, path) -> BeamParams:
    rec = _obj(rec, path)
    names = [f.name for f in fields(BeamParams)]
    _unknown(rec, set(names), path)
    vals = {k: _num(rec[k], f"{path}.{k}") for k in names if k in rec}
    try:
        return BeamParams(**vals)
    except ValueError as e:
        raise ConfigError(f"{path}.{e}") from None


# ---------------------------------------------------------------------------
# RunConfig

DEFAULTS = {
    "estimate": {
        "family": {"kind": "normal", "mu": [-1.0, 1.0], "sigma": 1.0},
        "central": None,
        "f": {"kind": "indicator_above", "threshold": 0.0},
        "backend": "inverse_transform",
        "bound": "lower",
        "n": 1000,
        "seed": 0,
        "solver": {"grid_points_per_dim": 21, "refine": True, "refine_iters": 2},
    },
    "bias-sweep": {
        "family": {"kind": "normal", "mu": [-1.0, 1.0], "sigma": 1.0},
        "central": None,
        "f": {"kind": "indicator_above", "threshold": 0.0},
        "backend": "inverse_transform",
        "n_grid": [1, 2, 4, 8, 16, 32, 64, 128, 256],
        "replications": 2000,
        "seed": 0,
        "solver": {"grid_points_per_dim": 21, "refine": False, "refine_iters": 2},
        "oracle": None,
        "oracle_points_per_dim": 101,
        "naive": {"distribution": {"kind": "normal", "mu": 0.0, "sigma": 1.0},
                  "f": {"kind": "identity"}, "m_grid": [1, 2, 4, 8], "n": 100,
                  "replications": 10000},
    },
    "consistency-check": {
        "problem": "beam",
        "route": "gradient_box",
        "beam": {},
        "family": None,
        "central": None,
        "f": None,
        "t_points_per_dim": 21,
    },
    "example-beam": {
        "beam": {},
        "n": 100000,
        "seed": 0,
        "solver": {"grid_points_per_dim": 21, "refine": True, "refine_iters": 2},
        "routes": list(BEAM_ROUTES),
        "oracle_points_per_dim": 101,
        "convergence": {"n_list": [1000, 10000, 100000], "replications": 20},
    },
    "example-no-consistency": {
        "f": {"kind": "constant", "value": 2.0},
        "n_list": [1, 10, 100, 1000],
        "seed": 0,
        "seeds": 20,
        "subfamily": [{"k": s.k, "bits": list(s.bits)} for s in DEFAULT_SUBFAMILY],
        "subfamily_n": 10000,
    },
}


@dataclass
class RunConfig:
    """Validated config: ``raw`` is the fully-resolved JSON, ``built`` the objects."""

    experiment: str
    raw: dict
    built: dict

    @property
    def seed(self) -> int:
        return self.raw.get("seed", 0)


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("family", "f",
                                                                              "central",
                                                                              "distribution"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _validate(experiment: str, raw: dict) -> dict:
    b: dict = {}
    if experiment == "estimate":
        b["family"] = _family(raw["family"], "family")
        b["central"] = None if raw["central"] is None else _distribution(raw["central"], "central")
        b["f"] = _function(raw["f"], "f")
        b["backend"] = _choice(raw["backend"], "backend", BACKENDS)
        b["bound"] = _choice(raw["bound"], "bound", ("lower", "upper"))
        b["n"] = _int(raw["n"], "n", 1)
        b["seed"] = _seed(raw["seed"], "seed")
        b["solver"] = _solver(raw["solver"], "solver", SolverConfig())
        if b["backend"] == "importance" and b["central"] is None:
            raise ConfigError("central: required by the importance backend")
    elif experiment == "bias-sweep":
        b["family"] = _family(raw["family"], "family")
        b["central"] = None if raw["central"] is None else _distribution(raw["central"], "central")
        b["f"] = _function(raw["f"], "f")
        b["backend"] = _choice(raw["backend"], "backend", BACKENDS)
        b["n_grid"] = _int_list(raw["n_grid"], "n_grid")
        b["replications"] = _int(raw["replications"], "replications", 2)
        b["seed"] = _seed(raw["seed"], "seed")
        b["solver"] = _solver(raw["solver"], "solver", SolverConfig(refine=False))
        b["oracle"] = None if raw["oracle"] is None else _num(raw["oracle"], "oracle")
        b["oracle_points_per_dim"] = _int(raw["oracle_points_per_dim"], "oracle_points_per_dim", 2)
        if b["backend"] == "importance" and b["central"] is None:
            raise ConfigError("central: required by the importance backend")
        if raw["naive"] is not None:
            nv = _obj(raw["naive"], "naive")
            _unknown(nv, {"distribution", "f", "m_grid", "n", "replications"}, "naive")
            b["naive"] = {
                "distribution": _distribution(nv["distribution"], "naive.distribution"),
                "f": _function(nv["f"], "naive.f"),
                "m_grid": _int_list(nv["m_grid"], "naive.m_grid"),
                "n": _int(nv["n"], "naive.n", 1),
                "replications": _int(nv["replications"], "naive.replications", 2),
            }
        else:
            b["naive"] = None
    elif experiment == "consistency-check":
        b["problem"] = _choice(raw["problem"], "problem", ("beam", "custom"))
        b["route"] = _choice(raw["route"], "route", ROUTES)
        b["t_points_per_dim"] = _int(raw["t_points_per_dim"], "t_points_per_dim", 2)
        b["beam"] = _beam(raw["beam"], "beam")
        if b["problem"] == "custom":
            if raw["family"] is None:
                raise ConfigError("family: required when problem is 'custom'")
            b["family"] = _family(raw["family"], "family")
            b["central"] = (None if raw["central"] is None
                            else _distribution(raw["central"], "central"))
            b["f"] = None if raw["f"] is None else _function(raw["f"], "f")
    elif experiment == "example-beam":
        b["beam"] = _beam(raw["beam"], "beam")
        b["n"] = _int(raw["n"], "n", 1)
        b["seed"] = _seed(raw["seed"], "seed")
        b["solver"] = _solver(raw["solver"], "solver", SolverConfig())
        routes = raw["routes"]
        if not isinstance(routes, list):
            raise ConfigError("routes: expected a list")
        b["routes"] = [_choice(r, f"routes[{i}]", ROUTES) for i, r in enumerate(routes)]
        b["oracle_points_per_dim"] = _int(raw["oracle_points_per_dim"], "oracle_points_per_dim", 2)
        if raw["convergence"] is not None:
            cv = _obj(raw["convergence"], "convergence")
            _unknown(cv, {"n_list", "replications"}, "convergence")
            b["convergence"] = {"n_list": _int_list(cv["n_list"], "convergence.n_list"),
                                "replications": _int(cv["replications"],
                                                     "convergence.replications", 2)}
        else:
            b["convergence"] = None
    else:
        b["f"] = _function(raw["f"], "f")
        grid = np.linspace(0.0, 2.0, 10_001)
        if not np.all(np.broadcast_to(b["f"].fn(grid), grid.shape) > 1.0):
            raise ConfigError("f: must exceed 1 everywhere on [0, 2]")
        b["n_list"] = _int_list(raw["n_list"], "n_list")
        b["seed"] = _seed(raw["seed"], "seed")
        b["seeds"] = _int(raw["seeds"], "seeds", 1)
        sub = raw["subfamily"]
        if not isinstance(sub, list) or not sub:
            raise ConfigError("subfamily: expected a non-empty list of {k, bits}")
        specs = []
        for i, rec in enumerate(sub):
            p = f"subfamily[{i}]"
            rec = _obj(rec, p)
            _unknown(rec, {"k", "bits"}, p)
            try:
                specs.append(BinaryDensitySpec(_int(rec.get("k"), f"{p}.k", 1),
                                               tuple(rec.get("bits", ()))))
            except (ValueError, TypeError) as e:
                raise ConfigError(f"{p}: {e}") from None
        b["subfamily"] = specs
        b["subfamily_n"] = _int(raw["subfamily_n"], "subfamily_n", 1)
    return b


def parse_config(source, experiment: str, seed_override: int | None = None) -> RunConfig:
    """Validate a config (path, ``"-"`` for stdin, a dict, or ``None`` for defaults)."""
    if experiment not in SUBCOMMANDS:
        raise ConfigError(f"experiment: must be one of {list(SUBCOMMANDS)}")
    if source is None:
        given = {}
    elif isinstance(source, dict):
        given = source
    else:
        try:
            text = sys.stdin.read() if str(source) == "-" else \
                Path(source).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ConfigError(f"config: file not found: {source}") from None
        try:
            given = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config: invalid JSON ({e})") from None
    given = _obj(given, "config")
    defaults = DEFAULTS[experiment]
    _unknown(given, set(defaults) | {"experiment"}, "")
    if "experiment" in given and given["experiment"] != experiment:
        raise ConfigError(f"experiment: config is for {given['experiment']!r}, "
                          f"not {experiment!r}")
    raw = _merge(defaults, {k: v for k, v in given.items() if k != "experiment"})
    if seed_override is not None and "seed" in raw:
        raw["seed"] = seed_override
    return RunConfig(experiment, raw, _validate(experiment, raw))


# ---------------------------------------------------------------------------
# runners


def _header(cfg: RunConfig) -> dict:
    return {"artifact_version": __version__, "experiment": cfg.experiment, "config": cfg.raw}


def _run_estimate(cfg: RunConfig, out: Path, threads: int) -> dict:
    b = cfg.built
    fn = upper_envelope_estimate if b["bound"] == "upper" else lower_envelope_estimate
    est = fn(b["f"].fn, b["family"], b["central"], b["backend"], b["n"], b["seed"], b["solver"])
    names = list(b["family"].names)
    write_csv(out / "estimate.csv", [*names, "objective"],
              [[*(float(c) for c in t), v] for t, v in est.solver_trace])
    return {"value": est.value, "argmin": dict(zip(names, est.argmin_t.tolist())),
            "n": est.n, "seed": est.seed, "backend": est.backend, "bound": b["bound"],
            "nan_points": est.nan_points, "evaluations": len(est.solver_trace)}


def _run_bias(cfg: RunConfig, out: Path, threads: int) -> dict:
    b = cfg.built
    oracle = b["oracle"]
    oracle_source = "config"
    if oracle is None:
        oracle, _ = quadrature_envelope(b["f"].fn, b["family"], b["oracle_points_per_dim"],
                                        b["f"].breakpoints)
        oracle_source = "quadrature"
    setup = EnvelopeSetup(b["f"].fn, b["family"], b["central"], b["backend"], b["solver"], oracle)
    res = bias_sweep(setup, b["n_grid"], b["replications"], b["seed"], threads)
    names = list(b["family"].names)
    write_csv(out / "bias_sweep.csv", ["n", "replication", "estimate", *names, "seed"], res.rows)
    summary = {
        "n_grid": res.n_grid, "replication_means": res.replication_means,
        "stderrs": res.stderrs, "oracle_envelope": res.oracle_envelope,
        "oracle_source": oracle_source, "below_oracle_ok": res.below_oracle_ok,
        "non_decreasing_ok": res.non_decreasing_ok, "monotone_ok": res.monotone_ok,
    }
    if b["naive"] is not None:
        nv = b["naive"]
        nres = naive_bias_sweep(nv["distribution"], nv["f"].fn, nv["m_grid"], nv["n"],
                                nv["replications"], derive_seed(b["seed"], 1 << 32), threads)
        write_csv(out / "naive_sweep.csv", ["m", "replication", "estimate", "seed"], nres.rows)
        naive = {"m_grid": nres.m_grid, "replication_means": nres.replication_means,
                 "stderrs": nres.stderrs, "non_increasing": nres.non_increasing}
        d = nv["distribution"]
        if d.to_config().get("kind") == "normal" and cfg.raw["naive"]["f"]["kind"] == "identity":
            # E min of two independent N(mu, s^2) sample means = mu - s / sqrt(pi)
            s = d.sigma / math.sqrt(nv["n"])
            oracle2 = d.mu - s / math.sqrt(math.pi)
            naive["min_of_two_oracle"] = oracle2
            if 2 in nres.m_grid:
                i = nres.m_grid.index(2)
                naive["min_of_two_ok"] = abs(nres.replication_means[i] - oracle2) \
                    <= 3 * nres.stderrs[i]
        summary["naive"] = naive
    return summary


def _run_consistency(cfg: RunConfig, out: Path, threads: int) -> dict:
    b = cfg.built
    if b["problem"] == "beam":
        setup = beam_certification_setup(b["beam"], t_points_per_dim=b["t_points_per_dim"])
    else:
        fam, central, fs = b["family"], b["central"], b["f"]
        setup = CertificationSetup(
            family=fam, f=None if fs is None else fs.fn, central=central,
            f_t=(importance_map(fs.fn, fam, central)
                 if fs is not None and central is not None else None),
            f_bound=None if fs is None else fs.bound,
            smooth_in_x=bool(fs is not None and fs.smooth),
            t_points_per_dim=b["t_points_per_dim"],
            breakpoints=() if fs is None else fs.breakpoints,
        )
    cert = certify(setup, b["route"])
    d = cert.to_dict()
    write_csv(out / "consistency_check.csv",
              ["route", "issued", "max_violation", "envelope_norm", "fd_max_rel_error",
               "integral_bound", "closed_form_bound"],
              [[d["theorem_applied"], d["issued"], d["max_violation"], d["envelope_norm"],
                d["fd_max_rel_error"], d["integral_bound"], d["closed_form_bound"]]])
    return {"certificate": d}


def _run_beam(cfg: RunConfig, out: Path, threads: int) -> dict:
    b = cfg.built
    params = b["beam"]
    res = run_beam_example(params, b["n"], b["seed"], b["solver"], tuple(b["routes"]))
    oracle = beam_oracle(params, b["oracle_points_per_dim"])
    summary = {
        "upper_failure_prob": res.upper_failure_prob,
        "envelope_estimate": res.estimate.value,
        "argmin": {"mu": float(res.estimate.argmin_t[0]), "sigma": float(res.estimate.argmin_t[1])},
        "n": res.estimate.n, "seed": res.estimate.seed,
        "oracle_envelope": oracle.envelope,
        "oracle_upper_failure_prob": oracle.upper_failure_prob,
        "oracle_argmin": {"mu": oracle.argmin[0], "sigma": oracle.argmin[1]},
        "certificates": {k: c.to_dict() for k, c in res.certificates.items()},
        "all_certificates_issued": all(c.issued for c in res.certificates.values()),
    }
    rows = []
    if b["convergence"] is not None:
        cv = b["convergence"]
        conv = beam_convergence(params, cv["n_list"], cv["replications"], b["seed"], b["solver"],
                                oracle.envelope, threads)
        rows = conv.rows
        last = np.array([r[2] for r in conv.rows if r[0] == conv.n_list[-1]])
        summary["convergence"] = {
            "n_list": conv.n_list, "means": conv.means, "stderrs": conv.stderrs,
            "abs_errors": conv.abs_errors, "halving_ok": conv.halving_ok,
            "final_error_ok": conv.final_error_ok(0.01),
            "final_replication_sd": float(last.std(ddof=1)) if last.size > 1 else 0.0,
        }
    write_csv(out / "beam.csv", ["n", "replication", "estimate", "mu", "sigma", "seed"], rows)
    return summary


def _run_no_consistency(cfg: RunConfig, out: Path, threads: int) -> dict:
    b = cfg.built
    rows, results = [], []
    for i in range(b["seeds"]):
        s = derive_seed(b["seed"], i)
        res = run_no_consistency_example(b["f"].fn, b["n_list"], s)
        results.append(res)
        rows += [[i, r.n, r.seed, r.objective, r.occupied_cells] for r in res.rows]
    write_csv(out / "no_consistency.csv",
              ["seed_index", "n", "seed", "objective", "occupied_cells"], rows)
    chk = finite_subfamily_check(b["f"].fn, b["subfamily"], b["subfamily_n"], b["seed"])
    return {
        "all_zero": all(r.all_zero for r in results),
        "envelope_lower_bound": min(r.envelope_lower_bound for r in results),
        "finite_subfamily": {"estimate": chk.estimate, "stderr": chk.stderr,
                             "exact_min": chk.exact_min, "exact_values": chk.exact_values,
                             "argmin_index": chk.argmin_index, "within_3se": chk.within_3se},
    }


RUNNERS = {
    "estimate": ("estimate", _run_estimate),
    "bias-sweep": ("bias_sweep", _run_bias),
    "consistency-check": ("consistency_check", _run_consistency),
    "example-beam": ("beam", _run_beam),
    "example-no-consistency": ("no_consistency", _run_no_consistency),
}


def dispatch(subcommand: str, config: RunConfig, out_dir=".", threads: int = 1) -> int:
    """Run one subcommand and write its CSV + JSON summary; returns the exit status."""
    if subcommand != config.experiment:
        print(f"error: config was validated for {config.experiment}", file=sys.stderr)
        return 2
    stem, runner = RUNNERS[subcommand]
    out = Path(out_dir)
    try:
        summary = runner(config, out, max(1, int(threads)))
    except (RouteInapplicableError, ArithmeticError, RuntimeError, AssertionError,
            ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    write_json(out / f"{stem}.json", {**_header(config), "result": summary})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="imprecise-mc",
                                description="Monte Carlo lower envelopes of expectations.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file ('-' for stdin); defaults if omitted")
        sp.add_argument("--seed", type=int, help="override the config's seed")
        sp.add_argument("--out-dir", default=".", help="directory for the CSV and JSON outputs")
        sp.add_argument("--threads", type=int, default=1, help="worker threads")
        if name == "consistency-check":
            sp.add_argument("--route", choices=ROUTES, help="override the config's route")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = parse_config(args.config, args.subcommand, args.seed)
        if getattr(args, "route", None):
            raw = copy.deepcopy(cfg.raw)
            raw["route"] = args.route
            cfg = parse_config({k: v for k, v in raw.items()}, args.subcommand, args.seed)
        if args.threads < 1:
            raise ConfigError("--threads: must be >= 1")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return dispatch(args.subcommand, cfg, args.out_dir, args.threads)


if __name__ == "__main__":
    sys.exit(main())
