"""Command-line front end.

    onebit capacity coherent --snr 1 --nt 2 --nr 1024
    onebit capacity noncoherent --T 3 --gamma 0.5 --nr 4096 --method exact
    onebit bounds --T 6 --snr 1 --nr 1e6
    onebit volume --T 4 --gamma 0.8 --method mc --samples 1e6 --seed 7
    onebit simulate --T 3 --gamma 0.8 --nr 1000 --seed 1
    onebit validate all
    onebit sweep config.ini
    onebit replay out.csv.manifest.json

Parameters accept comma-separated lists; one record is emitted per point
of their cross product. Exit codes: 0 ok, 1 internal error, 2 bad
arguments, 3 unsupported combination, 4 validation failure.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import csv
import io
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from . import __version__, mc
from .coherent import (
    CoherentParams,
    capacity_coherent,
    capacity_coherent_spherical,
    fisher_det_coherent,
)
from .covariance_space import (
    gamma_from_snr,
    input_from_q,
    log_vol_Q_asymptotic,
    log_vol_Q_exact,
    pairs,
    sample_uniform_Q,
    snr_from_gamma,
    vol_Q_mc,
)
from .exceptions import DomainError, UnsupportedError
from .noncoherent_capacity import (
    BOUND_METHODS,
    NoncoherentParams,
    alpha_t2,
    capacity_large_T_window,
    capacity_lb_indep,
    capacity_lb_uniform,
    capacity_low_snr,
    capacity_noncoherent_exact,
    capacity_ub_genie,
)
from .orthant import fisher_q_numeric, marginalize_last, pmf_mc, pmf_t2, pmf_t3
from .results import TERM_NAMES, CapacityEstimate
from .scalar_kernels import LOG2E
from .simulator import (
    RunManifest,
    disagreement_rates,
    estimate_q_hat,
    estimator_mse_sweep,
    fisher_coherent_mc,
    mi_exact_t2,
    simulate_block,
)

SAMPLES_ENV = "ONEBIT_SAMPLES"
DEFAULT_SAMPLES = 1_000_000
DEFAULT_MAX_CELLS = 10_000
SIG_DIGITS = 12

EXIT_OK, EXIT_INTERNAL, EXIT_BAD_ARGS, EXIT_UNSUPPORTED, EXIT_VALIDATION = 0, 1, 2, 3, 4

COHERENT_METHODS = ("exact", "low-snr", "high-snr", "large-nt", "spherical")
NONCOHERENT_METHODS = ("exact", "low-snr") + BOUND_METHODS


class BadArgs(ValueError):
    pass


def default_samples() -> int:
    raw = os.environ.get(SAMPLES_ENV)
    if raw is None:
        return DEFAULT_SAMPLES
    try:
        return int(float(raw))
    except ValueError:
        raise BadArgs(f"{SAMPLES_ENV} must be a number, got {raw!r}") from None


# --- formatting ---------------------------------------------------------------------


def round_sig(x):
    """Round floats to 12 significant digits; other values pass through."""
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if not math.isfinite(x) else float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.{SIG_DIGITS}g}"
    if isinstance(x, (list, tuple)):
        return " ".join(_cell(v) for v in x)
    return str(x)


def render(records: list[dict], fmt: str, columns: list[str] | None = None) -> str:
    records = [{k: (list(map(round_sig, v)) if isinstance(v, list) else round_sig(v)) for k, v in r.items()} for r in records]
    if fmt == "json":
        return json.dumps(records, indent=None, separators=(",", ":")) + "\n"
    if fmt != "csv":
        raise BadArgs(f"unknown format {fmt!r}")
    if columns is None:
        columns = []
        for r in records:
            for k in r:
                if k not in columns:
                    columns.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in records:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def estimate_record(est: CapacityEstimate) -> dict:
    rec = {"method": est.method, "value_bits": est.bits_per_use, "std_err": est.std_err}
    rec.update({name: est.terms.get(name, 0.0) for name in TERM_NAMES})
    return rec


# --- argument helpers ---------------------------------------------------------------------


def _num_list(text: str | None, cast: Callable = float) -> list | None:
    if text is None:
        return None
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            v = float(part)
        except ValueError:
            raise BadArgs(f"not a number: {part!r}") from None
        if cast is int:
            if v != int(v):
                raise BadArgs(f"expected an integer, got {part!r}")
            v = int(v)
        out.append(v)
    return out


def _snr_values(args) -> list[float]:
    if args.get("snr") is not None and args.get("gamma") is not None:
        raise BadArgs("give either --snr or --gamma, not both")
    if args.get("gamma") is not None:
        try:
            return [snr_from_gamma(g) for g in args["gamma"]]
        except DomainError as exc:
            raise BadArgs(str(exc)) from None
    return args.get("snr") or [1.0]


def _grid(**axes) -> list[dict]:
    names = list(axes)
    return [dict(zip(names, combo)) for combo in itertools.product(*(axes[n] for n in names))]


# --- operations -----------------------------------------------------------------------------
# Each operation maps a plain parameter dict to a list of records, so a
# manifest holding that dict is enough to replay it.


def op_capacity_coherent(p: dict) -> list[dict]:
    method = p.get("method") or "exact"
    if method not in COHERENT_METHODS:
        raise UnsupportedError(f"coherent methods are {', '.join(COHERENT_METHODS)}; got {method!r}")
    out = []
    for cell in _grid(snr=_snr_values(p), nt=p.get("nt") or [1], nr=p.get("nr") or [1024]):
        params = CoherentParams(cell["snr"], int(cell["nt"]), cell["nr"])
        if method == "exact":
            est = capacity_coherent(params)
        elif method == "spherical":
            if params.nt < 2:
                raise UnsupportedError("spherical inputs need nt >= 2")
            est = capacity_coherent_spherical(params)
        else:
            est = capacity_coherent(params, regime=method)
        out.append({"channel": "coherent", "snr": cell["snr"], "nt": cell["nt"], "nr": cell["nr"], **estimate_record(est)})
    return out


def noncoherent_estimate(params: NoncoherentParams, method: str, samples: int, seed: int) -> CapacityEstimate:
    if method == "exact":
        return capacity_noncoherent_exact(params, n_samples=samples, seed=seed)
    if method == "lb-uniform":
        return capacity_lb_uniform(params)
    if method == "lb-indep":
        return capacity_lb_indep(params)
    if method == "ub-genie":
        return capacity_ub_genie(params)
    if method == "low-snr":
        return capacity_low_snr(params)
    if method == "large-t":
        lb, ub = capacity_large_T_window(params)
        # reported as the lower end; the record carries both ends
        return CapacityEstimate(lb, {}, "large-t", extra={"lb": lb, "ub": ub})
    raise UnsupportedError(f"non-coherent methods are {', '.join(NONCOHERENT_METHODS)}; got {method!r}")


def op_capacity_noncoherent(p: dict) -> list[dict]:
    method = p.get("method") or "exact"
    if method not in NONCOHERENT_METHODS:
        raise UnsupportedError(f"non-coherent methods are {', '.join(NONCOHERENT_METHODS)}; got {method!r}")
    samples = int(p.get("samples") or default_samples())
    seed = int(p.get("seed") or 0)
    out = []
    for cell in _grid(snr=_snr_values(p), T=p.get("T") or [2], nr=p.get("nr") or [1024]):
        T = int(cell["T"])
        nt = p.get("nt")
        params = NoncoherentParams(cell["snr"], T, cell["nr"], int(nt[0]) if nt else None)
        est = noncoherent_estimate(params, method, samples, seed)
        rec = {
            "channel": "noncoherent",
            "snr": cell["snr"],
            "gamma": params.gamma,
            "T": T,
            "nr": cell["nr"],
            "variant": method,
            **estimate_record(est),
        }
        if method == "large-t":
            rec["lb"], rec["ub"] = est.extra["lb"], est.extra["ub"]
        out.append(rec)
    return out


def op_bounds(p: dict) -> list[dict]:
    out = []
    methods = ["lb-uniform", "lb-indep", "ub-genie"]
    for T in p.get("T") or [2]:
        ms = methods + (["exact"] if T in (2, 3) else [])
        for m in ms:
            out.extend(op_capacity_noncoherent({**p, "T": [T], "method": m}))
    return out


def op_volume(p: dict) -> list[dict]:
    method = p.get("method") or "exact"
    samples = int(p.get("samples") or default_samples())
    seed = int(p.get("seed") or 0)
    out = []
    for cell in _grid(T=p.get("T") or [3], gamma=p.get("gamma") or [1.0]):
        T, g = int(cell["T"]), cell["gamma"]
        rec = {"T": T, "gamma": g, "method": method}
        if method == "exact":
            rec.update(volume=math.exp(log_vol_Q_exact(T, g)), log2_volume=log_vol_Q_exact(T, g) * LOG2E, std_err=None)
        elif method == "mc":
            est = vol_Q_mc(T, g, samples, seed)
            rec.update(volume=est.value, log2_volume=math.log2(est.value) if est.value > 0 else -math.inf, std_err=est.std_err)
        elif method in ("coarse", "fine"):
            if g != 1.0:
                raise UnsupportedError("asymptotic volumes are for gamma = 1")
            lv = log_vol_Q_asymptotic(T, method)
            rec.update(volume=2.0**lv, log2_volume=lv, std_err=None)
        else:
            raise UnsupportedError(f"volume methods are exact, mc, coarse, fine; got {method!r}")
        out.append(rec)
    return out


def op_simulate(p: dict) -> list[dict]:
    seed = int(p.get("seed") or 0)
    out = []
    for cell in _grid(snr=_snr_values(p), T=p.get("T") or [2], nr=p.get("nr") or [1024]):
        T = int(cell["T"])
        gamma = gamma_from_snr(cell["snr"])
        cell_seed = mc.derive_seed(seed, "simulate", T, cell["snr"], cell["nr"])
        q = sample_uniform_Q(T, gamma, cell_seed)
        X = input_from_q(q, cell["snr"])
        block = simulate_block(X, int(cell["nr"]), cell_seed)
        q_hat = estimate_q_hat(block.Y)
        rates = disagreement_rates(block.Y)
        for k, (i, j) in enumerate(pairs(T)):
            out.append(
                {
                    "snr": cell["snr"],
                    "T": T,
                    "nr": cell["nr"],
                    "pair": f"{i + 1}-{j + 1}",
                    "q": float(q[k]),
                    "q_hat": float(q_hat[k]),
                    "disagreement": float(rates[k]),
                    "seed": cell_seed,
                }
            )
    return out


# --- validation suites ----------------------------------------------------------------------


def _check(suite, name, measured, expected, tol, passed) -> dict:
    return {
        "suite": suite,
        "check": name,
        "measured": float(measured),
        "expected": float(expected),
        "tolerance": None if tol is None else float(tol),
        "passed": bool(passed),
    }


def suite_fisher_coherent(p: dict) -> list[dict]:
    samples = int(p.get("samples") or default_samples())
    seed = int(p.get("seed") or 0)
    rows = []
    for nt in p.get("nt") or [1, 2, 3]:
        for r in (0.5, 2.0):
            x = np.zeros(int(nt))
            x[0] = r
            det = float(np.linalg.det(fisher_coherent_mc(x, samples, seed).value))
            ref = float(fisher_det_coherent(r, int(nt)))
            rel = abs(det / ref - 1.0)
            rows.append(_check("fisher-coherent", f"det nt={nt} r={r}", det, ref, 0.02, rel < 0.02))
    return rows


def suite_volume(p: dict) -> list[dict]:
    samples = int(p.get("samples") or default_samples())
    seed = int(p.get("seed") or 0)
    rows = []
    for T in p.get("T") or [3, 4, 5]:
        for g in p.get("gamma") or [1.0]:
            est = vol_Q_mc(int(T), g, samples, seed)
            ref = math.exp(log_vol_Q_exact(int(T), g))
            tol = max(3.0 * est.std_err, 1e-12 * ref)
            rows.append(_check("volume", f"mc T={T} gamma={g}", est.value, ref, tol, abs(est.value - ref) < tol))
    return rows


def suite_estimator_mse(p: dict) -> list[dict]:
    T = int((p.get("T") or [3])[0])
    g = (p.get("gamma") or [0.8])[0]
    nrs = [int(n) for n in (p.get("nr") or [100, 1000])]
    trials = int(p.get("trials") or 500)
    rows = estimator_mse_sweep(T, g, nrs, trials, int(p.get("seed") or 0))
    return [
        _check("estimator-mse", f"nr={r['nr']} pair={r['pair']}", r["mse"], r["bound"], r["limit"], r["passed"])
        for r in rows
    ]


def suite_mi_t2(p: dict) -> list[dict]:
    g = (p.get("gamma") or [0.5])[0]
    exps = list(range(10, 17))
    a = float(alpha_t2(g))
    per_use = []
    gaps = []
    rows = []
    for e in exps:
        nr = 2**e
        mi = mi_exact_t2(nr, g, "jeffreys")
        pred = 0.5 * math.log2(nr / (2.0 * math.pi * math.e)) + math.log2(a)
        per_use.append(mi / 2.0)
        gaps.append(mi - pred)
        rows.append(_check("mi-t2", f"gap nr=2^{e}", mi, pred, 0.05 if e == 16 else None, e != 16 or abs(mi - pred) < 0.05))
    slope = float(np.polyfit(exps, per_use, 1)[0])
    rows.append(_check("mi-t2", "slope per use vs log2 nr", slope, 0.25, 0.02, 0.23 <= slope <= 0.27))
    rows.append(_check("mi-t2", "gap shrinks 2^10 -> 2^16", abs(gaps[-1]), abs(gaps[0]), 0.0, abs(gaps[-1]) < abs(gaps[0])))
    return rows


def suite_orthant(p: dict) -> list[dict]:
    samples = int(p.get("samples") or default_samples())
    seed = int(p.get("seed") or 0)
    rows = []
    tv2 = 0.5 * float(np.sum(np.abs(pmf_mc([0.5], samples, seed) - pmf_t2(0.5))))
    rows.append(_check("orthant", "pmf_mc T=2 q=0.5 TV", tv2, 0.0, 0.003, tv2 < 0.003))
    q = sample_uniform_Q(3, 0.9, seed)
    tv3 = 0.5 * float(np.sum(np.abs(pmf_mc(q, samples, seed) - pmf_t3(q))))
    rows.append(_check("orthant", "pmf_mc T=3 TV", tv3, 0.0, 0.005, tv3 < 0.005))
    marg = float(np.max(np.abs(marginalize_last(pmf_t3(q), 3) - pmf_t2(q[0]))))
    rows.append(_check("orthant", "pmf_t3 marginal", marg, 0.0, 1e-14, marg <= 1e-14))
    det = math.sqrt(float(np.linalg.det(fisher_q_numeric([0.0, 0.0, 0.0], 3))))
    ref = (2.0 / math.pi) ** 3
    rows.append(_check("orthant", "sqrt det J(q=0) T=3", det, ref, 0.01, abs(det / ref - 1) < 0.01))
    return rows


SUITES = {
    "fisher-coherent": suite_fisher_coherent,
    "volume": suite_volume,
    "estimator-mse": suite_estimator_mse,
    "mi-t2": suite_mi_t2,
    "orthant": suite_orthant,
}


def op_validate(p: dict) -> list[dict]:
    suite = p.get("suite") or "all"
    if suite == "all":
        rows = []
        for name, fn in SUITES.items():
            # suite-specific defaults; shared flags would mismatch between suites
            rows.extend(fn({"samples": p.get("samples"), "seed": p.get("seed")}))
        return rows
    if suite not in SUITES:
        raise BadArgs(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}, all")
    return SUITES[suite](p)


OPERATIONS: dict[str, Callable[[dict], list[dict]]] = {
    "capacity-coherent": op_capacity_coherent,
    "capacity-noncoherent": op_capacity_noncoherent,
    "bounds": op_bounds,
    "volume": op_volume,
    "simulate": op_simulate,
    "validate": op_validate,
}


def run_operation(name: str, params: dict) -> tuple[list[dict], RunManifest]:
    manifest = RunManifest(
        operation=name,
        params=params,
        seed=params.get("seed"),
        samples={"samples": params.get("samples")},
    )
    start = time.perf_counter()
    records = OPERATIONS[name](params)
    manifest.wall_clock = time.perf_counter() - start
    for r in records:
        r["manifest_id"] = manifest.manifest_id
    manifest.digest_outputs([{k: round_sig(v) for k, v in r.items()} for r in records])
    return records, manifest


# --- sweep ---------------------------------------------------------------------------------------

AXIS_CASTS = {"snr": float, "gamma": float, "T": int, "nt": int, "nr": float}
SWEEP_OPERATIONS = ("capacity-coherent", "capacity-noncoherent", "volume")


def parse_axis(name: str, text: str) -> list:
    try:
        value = ast.literal_eval(text.strip())
    except (ValueError, SyntaxError):
        raise BadArgs(f"axis {name!r} must be a list literal, got {text!r}") from None
    if not isinstance(value, (list, tuple)):
        value = [value]
    cast = AXIS_CASTS.get(name)
    if cast is None:
        raise BadArgs(f"unknown axis {name!r}; use {', '.join(AXIS_CASTS)}")
    try:
        return [cast(v) for v in value]
    except (TypeError, ValueError):
        raise BadArgs(f"axis {name!r} has non-numeric entries") from None


def load_sweep_config(path: str) -> dict:
    """Read an INI sweep file: ``[sweep]`` settings and an ``[axes]`` table of list literals."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep "T" upper-case
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise BadArgs(f"cannot read config: {exc}") from None
    except configparser.Error as exc:
        raise BadArgs(f"bad config: {exc}") from None
    if "sweep" not in cp:
        raise BadArgs("config needs a [sweep] section")
    s = cp["sweep"]
    op = s.get("operation", "capacity-noncoherent")
    if op not in SWEEP_OPERATIONS:
        raise BadArgs(f"sweep operation must be one of {', '.join(SWEEP_OPERATIONS)}")
    axes = {name: parse_axis(name, text) for name, text in cp["axes"].items()} if "axes" in cp else {}
    if "snr" in axes and "gamma" in axes and op != "volume":
        raise BadArgs("sweep over snr or gamma, not both")
    try:
        cfg = {
            "operation": op,
            "method": s.get("method"),
            "seed": int(s.get("seed", "0")),
            "samples": int(float(s["samples"])) if "samples" in s else default_samples(),
            "format": s.get("format", "csv"),
            "out": s.get("out"),
            "max_cells": int(s.get("max_cells", str(DEFAULT_MAX_CELLS))),
            "workers": int(s.get("workers", "0")) or mc.default_workers(),
            "axes": axes,
        }
    except ValueError as exc:
        raise BadArgs(f"bad [sweep] value: {exc}") from None
    if cfg["format"] not in ("csv", "json"):
        raise BadArgs("format must be csv or json")
    return cfg


def run_sweep(cfg: dict) -> tuple[str, list[dict]]:
    axes = dict(cfg["axes"])  # a dict, or ordered (name, values) pairs from a manifest
    names = list(axes)
    empty = not names or any(len(v) == 0 for v in axes.values())
    cells = [] if empty else _grid(**axes)
    if len(cells) > cfg["max_cells"]:
        raise BadArgs(f"grid has {len(cells)} cells, above max_cells = {cfg['max_cells']}")
    op = cfg["operation"]

    def run_cell(index_cell):
        index, cell = index_cell
        seed = mc.derive_seed(cfg["seed"], op, index)
        params = {k: [v] for k, v in cell.items()}
        params.update(method=cfg["method"], seed=seed, samples=cfg["samples"])
        row = dict(cell)
        try:
            recs, manifest = run_operation(op, params)
            rec = recs[0]
            value = rec.get("value_bits", rec.get("log2_volume"))
            row.update(
                method=rec.get("method"),
                value_bits=value,
                std_err=rec.get("std_err"),
                seed=seed,
                manifest_id=manifest.manifest_id,
                error="",
            )
        except Exception as exc:  # a failed cell is reported in its row
            row.update(method=cfg["method"], value_bits=None, std_err=None, seed=seed, manifest_id="", error=f"{type(exc).__name__}: {exc}")
        return row

    with ThreadPoolExecutor(max_workers=max(1, cfg["workers"])) as pool:
        rows = list(pool.map(run_cell, enumerate(cells)))
    columns = names + ["method", "value_bits", "std_err", "seed", "manifest_id", "error"]
    return render(rows, cfg["format"], columns), rows


# --- argparse ----------------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_ARGS)


def _common(p: argparse.ArgumentParser, *names: str) -> None:
    helps = {
        "snr": "linear SNR (comma-separated list allowed)",
        "gamma": "snr / (1 + snr), alternative to --snr",
        "T": "coherence time in symbols",
        "nt": "transmit antennas",
        "nr": "receive antennas",
    }
    for n in names:
        p.add_argument(f"--{n}", help=helps[n])
    p.add_argument("--samples", help=f"Monte Carlo samples (default {DEFAULT_SAMPLES}, env {SAMPLES_ENV})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="write records here and a manifest next to it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="onebit", description="Capacity of 1-bit quantized MIMO fading channels.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("capacity", help="asymptotic capacity for coherent or non-coherent channels")
    p.add_argument("channel", choices=("coherent", "noncoherent"))
    p.add_argument("--method", help=f"coherent: {', '.join(COHERENT_METHODS)}; noncoherent: {', '.join(NONCOHERENT_METHODS)}")
    _common(p, "snr", "gamma", "T", "nt", "nr")

    p = sub.add_parser("bounds", help="lower and upper bounds (and the exact value when T <= 3)")
    _common(p, "snr", "gamma", "T", "nt", "nr")

    p = sub.add_parser("volume", help="volume of the correlation set Q_gamma")
    p.add_argument("--method", default="exact", help="exact, mc, coarse or fine")
    _common(p, "T", "gamma")

    p = sub.add_parser("simulate", help="simulate one block with a uniform q and estimate q back")
    _common(p, "snr", "gamma", "T", "nr")

    p = sub.add_parser("validate", help="run numerical validation suites")
    p.add_argument("suite", nargs="?", default="all", help=f"{', '.join(SUITES)} or all")
    p.add_argument("--trials", type=int, help="trials for estimator-mse")
    _common(p, "gamma", "T", "nt", "nr")

    p = sub.add_parser("sweep", help="evaluate a grid from an INI config")
    p.add_argument("config")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")

    p = sub.add_parser("replay", help="rerun a manifest and check the outputs digest")
    p.add_argument("manifest")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    return parser


def _params_from_args(ns: argparse.Namespace) -> dict:
    d = {}
    for name, cast in (("snr", float), ("gamma", float), ("T", int), ("nt", int), ("nr", float)):
        if hasattr(ns, name):
            d[name] = _num_list(getattr(ns, name), cast)
    for v in ("nr",):
        if d.get(v):
            if any(x < 1 for x in d[v]):
                raise BadArgs("nr must be >= 1")
    if getattr(ns, "samples", None) is not None:
        s = _num_list(ns.samples, int)
        if not s or s[0] < 1:
            raise BadArgs("--samples must be a positive integer")
        d["samples"] = s[0]
    if hasattr(ns, "seed"):
        d["seed"] = ns.seed
    if getattr(ns, "method", None) is not None:
        d["method"] = ns.method
    if getattr(ns, "trials", None) is not None:
        d["trials"] = ns.trials
    if getattr(ns, "suite", None) is not None:
        d["suite"] = ns.suite
    return d


def _emit(text: str, out: str | None, manifest: RunManifest | None, stdout) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
        if manifest is not None:
            with open(out + ".manifest.json", "w") as fh:
                fh.write(manifest.to_json() + "\n")
    else:
        stdout.write(text)


def main(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if ns.command == "sweep":
            cfg = load_sweep_config(ns.config)
            if ns.format:
                cfg["format"] = ns.format
            if ns.out:
                cfg["out"] = ns.out
            text, rows = run_sweep(cfg)
            saved_cfg = {k: v for k, v in cfg.items() if k not in ("out", "workers")}
            saved_cfg["axes"] = [[k, v] for k, v in cfg["axes"].items()]  # keeps grid order through JSON
            manifest = RunManifest("sweep", saved_cfg, cfg["seed"])
            manifest.digest_outputs(text)
            _emit(text, cfg["out"], manifest, stdout)
            return EXIT_OK
        if ns.command == "replay":
            with open(ns.manifest) as fh:
                saved = RunManifest.from_dict(json.load(fh))
            if saved.operation == "sweep":
                cfg = dict(saved.params)
                cfg["workers"] = mc.default_workers()
                text, _ = run_sweep(cfg)
                fresh = RunManifest("sweep", saved.params, saved.seed)
                fresh.digest_outputs(text)
            else:
                records, fresh = run_operation(saved.operation, saved.params)
                text = render(records, ns.format)
            _emit(text, ns.out, None, stdout)
            if fresh.outputs_digest != saved.outputs_digest:
                print("replay: outputs digest differs from the manifest", file=sys.stderr)
                return EXIT_VALIDATION
            return EXIT_OK

        params = _params_from_args(ns)
        op = {"capacity": f"capacity-{getattr(ns, 'channel', '')}"}.get(ns.command, ns.command)
        records, manifest = run_operation(op, params)
        _emit(render(records, ns.format), ns.out, manifest, stdout)
        if ns.command == "validate":
            for r in records:
                status = "PASS" if r["passed"] else "FAIL"
                print(f"{status} {r['suite']}: {r['check']} measured={r['measured']:.6g} expected={r['expected']:.6g}", file=sys.stderr)
            if not all(r["passed"] for r in records):
                return EXIT_VALIDATION
        return EXIT_OK
    except UnsupportedError as exc:
        print(f"onebit: unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (BadArgs, DomainError, ValueError) as exc:
        print(f"onebit: error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS
    except Exception as exc:  # noqa: BLE001 - report and map to the internal-error code
        print(f"onebit: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
