"""Command-line front end: scenario files drive design, curve, and simulation runs.

Scenario files are flat INI-style key/value text (see README for the grammar):

    [grid]      T, n
    [rate]      kind = two_level | raised_cosine | table, parameters, dark_rate
    [gain]      kind = deterministic | geometric, zeta
    [receiver]  N0_over_qe2 (normalized units, q_e = 1) or N0 + q_e; P
    [detection] theta = comma-separated list
    [estimation] true_delay, window = lo, hi
    [simulation] trials, seed, antithetic, stratified

Exit codes: 0 success, 2 usage or scenario errors, 3 numeric/domain errors.
All outputs are deterministic byte-for-byte given the same inputs; the
OPTCORR_MAX_WORKERS environment variable caps simulation worker threads
without affecting results.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .detector_design import (
    curve_to_csv,
    design_detector,
    exponent_tradeoff_curve,
    fa_exponent_dark,
    omf_correlator,
)
from .delay_estimation import delay_mse, optimal_delay_correlator
from .errors import DomainError, NumericError, OptcorrError
from .montecarlo import MonteCarloReport, SimConfig, delay_experiment, detection_experiment
from .signal_model import (
    GainModel,
    Grid,
    RateFunction,
    ReceiverConfig,
    normalize_power,
    raised_cosine_rate,
    tabulated_rate,
    two_level_rate,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class ScenarioError(OptcorrError):
    """Scenario file cannot be parsed or validated (exit code 2)."""


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    grid: Grid
    rate: RateFunction
    gain: GainModel
    receiver: ReceiverConfig
    thetas: list | None
    true_delay: float | None
    window: tuple | None
    trials: int | None
    seed: int | None
    antithetic: bool
    stratified: bool


def _get(parser, section, key, cast, default=None, required=False):
    if not parser.has_section(section):
        if required:
            raise ScenarioError(f"missing required section [{section}]")
        return default
    if not parser.has_option(section, key):
        if required:
            raise ScenarioError(f"missing required key '{key}' in [{section}]")
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except ValueError as exc:
        raise ScenarioError(f"bad value for '{key}' in [{section}]: {raw!r}") from exc


def _float_list(raw: str) -> list:
    return [float(tok) for tok in raw.replace(",", " ").split()]


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def load_scenario(path: str) -> Scenario:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ScenarioError(f"scenario parse error: {exc}") from exc

    sid = _get(parser, "scenario", "id", str,
               default=os.path.splitext(os.path.basename(path))[0])
    grid = Grid(T=_get(parser, "grid", "T", float, required=True),
                n=_get(parser, "grid", "n", int, required=True))

    dark = _get(parser, "rate", "dark_rate", float, default=0.0)
    kind = _get(parser, "rate", "kind", str, required=True).strip().lower()
    if kind == "two_level":
        rate = two_level_rate(_get(parser, "rate", "lambda1", float, required=True),
                              _get(parser, "rate", "lambda2", float, required=True),
                              grid, dark_rate=dark)
    elif kind == "raised_cosine":
        rate = raised_cosine_rate(_get(parser, "rate", "amplitude", float, required=True),
                                  grid,
                                  start=_get(parser, "rate", "start", float, default=0.0),
                                  width=_get(parser, "rate", "width", float, default=None),
                                  dark_rate=dark)
    elif kind == "table":
        samples = _get(parser, "rate", "samples", _float_list, required=True)
        if len(samples) != grid.n:
            raise ScenarioError(
                f"rate table has {len(samples)} samples but the grid needs {grid.n}")
        rate = tabulated_rate(samples, grid, dark_rate=dark)
    else:
        raise ScenarioError(f"unknown rate kind {kind!r} "
                            "(expected two_level, raised_cosine, or table)")

    gkind = _get(parser, "gain", "kind", str, required=True).strip().lower()
    if gkind == "deterministic":
        gain = GainModel.deterministic()
    elif gkind == "geometric":
        gain = GainModel.geometric(_get(parser, "gain", "zeta", float, required=True))
    else:
        raise ScenarioError(f"unknown gain kind {gkind!r}")

    has_norm = parser.has_option("receiver", "N0_over_qe2")
    has_phys = parser.has_option("receiver", "N0") or parser.has_option("receiver", "q_e")
    if has_norm and has_phys:
        raise ScenarioError("receiver units must not mix: give either N0_over_qe2 "
                            "(normalized, q_e=1) or N0 with q_e")
    if has_norm:
        n0 = _get(parser, "receiver", "N0_over_qe2", float, required=True)
        qe = 1.0
    elif has_phys:
        n0 = _get(parser, "receiver", "N0", float, required=True)
        qe = _get(parser, "receiver", "q_e", float, required=True)
    else:
        raise ScenarioError("missing required key 'N0_over_qe2' (or 'N0'/'q_e') in [receiver]")
    receiver = ReceiverConfig(N0=n0, q_e=qe,
                              P=_get(parser, "receiver", "P", float, required=True),
                              T=grid.T)

    thetas = _get(parser, "detection", "theta", _float_list, default=None)
    true_delay = _get(parser, "estimation", "true_delay", float, default=None)
    window_raw = _get(parser, "estimation", "window", _float_list, default=None)
    window = None
    if window_raw is not None:
        if len(window_raw) != 2:
            raise ScenarioError("estimation window must be 'lo, hi'")
        window = (window_raw[0], window_raw[1])

    trials = _get(parser, "simulation", "trials", int, default=None)
    seed = _get(parser, "simulation", "seed", int, default=None)
    antithetic = _get(parser, "simulation", "antithetic", _bool, default=False)
    stratified = _get(parser, "simulation", "stratified", _bool, default=False)
    return Scenario(sid, grid, rate, gain, receiver, thetas, true_delay, window,
                    trials, seed, antithetic, stratified)


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

def _fmt(x: float) -> str:
    return "%.12g" % x


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_design(args) -> int:
    scn = load_scenario(args.scenario)
    if args.theta is not None:
        theta = args.theta
    elif scn.thetas:
        theta = scn.thetas[0]
    else:
        raise ScenarioError("no threshold: pass --theta or add theta to [detection]")
    design = design_detector(theta, scn.rate, scn.gain, scn.receiver)
    omf = omf_correlator(scn.rate, scn.gain, scn.receiver)
    t = scn.grid.times()
    lines = ["t,lambda,w_star,w_omf"]
    for i in range(scn.grid.n):
        lines.append(",".join(_fmt(v) for v in
                              (t[i], scn.rate.values[i],
                               design.w_star.values[i], omf.values[i])))
    _write_text(args.output, "\n".join(lines) + "\n")
    print(f"scenario {scn.scenario_id}: theta={_fmt(theta)}")
    print(f"E_FA   = {_fmt(design.E_FA)}")
    print(f"E_MD   = {_fmt(design.E_MD)}")
    print(f"s_star = {_fmt(design.s_star)}")
    print(f"c_star = {_fmt(design.c_star)}")
    return EXIT_OK


def cmd_tradeoff(args) -> int:
    scn = load_scenario(args.scenario)
    if args.points < 1:
        raise ScenarioError("--points must be >= 1")
    if args.points == 1:
        thetas = np.array([args.theta_min])
    else:
        if not args.theta_max > args.theta_min:
            raise ScenarioError("--theta-max must exceed --theta-min")
        thetas = np.linspace(args.theta_min, args.theta_max, args.points)
    omf = omf_correlator(scn.rate, scn.gain, scn.receiver)
    curve = exponent_tradeoff_curve(thetas, [("omf", omf)], scn.rate, scn.gain,
                                    scn.receiver)
    _write_text(args.output, curve_to_csv(curve))
    return EXIT_OK


def _report_row(sid: str, rep: MonteCarloReport, analytic: float, ok: bool) -> str:
    rate = rep.empirical_rate if rep.empirical_rate is not None else rep.empirical_mse
    return ",".join([sid, str(rep.trials), _fmt(rate), _fmt(rep.half_width),
                     _fmt(analytic), "pass" if ok else "fail"])


def _gaussian_upper_tail(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _simulate_detect(scn: Scenario, sim: SimConfig, workers: int) -> list:
    if not scn.thetas:
        raise ScenarioError("detect mode needs theta values in [detection]")
    rows = []
    for theta in scn.thetas:
        design = design_detector(theta, scn.rate, scn.gain, scn.receiver)
        w = design.w_star
        md = detection_experiment(w, theta, "H1", scn.rate, scn.gain, scn.receiver,
                                  sim, workers=workers)
        md_bound = math.exp(-scn.receiver.T * design.E_MD)
        md_ok = md.empirical_rate <= md_bound + 3.0 * md.half_width
        rows.append((f"{scn.scenario_id}/md@theta={theta:g}", md, md_bound, md_ok))

        fa = detection_experiment(w, theta, "H0", scn.rate, scn.gain, scn.receiver,
                                  sim, workers=workers)
        if scn.rate.dark_rate == 0.0:
            energy = scn.receiver.P * scn.receiver.T
            analytic = _gaussian_upper_tail(
                theta * scn.receiver.T / math.sqrt(scn.receiver.N0 * energy / 2.0))
            slack = 3.0 * max(math.sqrt(analytic * (1 - analytic) / sim.trials),
                              1.0 / sim.trials)
            fa_ok = abs(fa.empirical_rate - analytic) <= slack
        else:
            e_fa, _ = fa_exponent_dark(theta, w, scn.rate.dark_rate, scn.gain,
                                       scn.receiver)
            analytic = math.exp(-scn.receiver.T * e_fa)
            fa_ok = fa.empirical_rate <= analytic + 3.0 * fa.half_width
        rows.append((f"{scn.scenario_id}/fa@theta={theta:g}", fa, analytic, fa_ok))
    return rows


def _simulate_delay(scn: Scenario, sim: SimConfig, workers: int) -> list:
    if scn.true_delay is None or scn.window is None:
        raise ScenarioError("delay mode needs true_delay and window in [estimation]")
    w_opt = optimal_delay_correlator(scn.rate, scn.gain, scn.receiver)
    w_matched = normalize_power(scn.rate.waveform, scn.receiver.P, scn.receiver.T)
    rows = []
    for label, w in (("optimal", w_opt), ("matched", w_matched)):
        rep = delay_experiment(w, scn.rate, scn.true_delay, scn.window, scn.gain,
                               scn.receiver, sim, workers=workers)
        predicted, _ = delay_mse(w, scn.rate, scn.gain, scn.receiver)
        ok = predicted / 2.0 <= rep.empirical_mse <= predicted * 2.0
        rows.append((f"{scn.scenario_id}/delay-{label}", rep, predicted, ok))
    return rows


def cmd_simulate(args) -> int:
    scn = load_scenario(args.scenario)
    if scn.trials is None or scn.seed is None:
        raise ScenarioError("missing required key 'trials'/'seed' in [simulation]")
    workers = int(os.environ.get("OPTCORR_MAX_WORKERS", "1"))
    sim = SimConfig(trials=scn.trials, seed=scn.seed, grid=scn.grid,
                    antithetic=scn.antithetic, stratified=scn.stratified)
    if args.mode == "detect":
        rows = _simulate_detect(scn, sim, workers)
    else:
        rows = _simulate_delay(scn, sim, workers)

    lines = []
    for sid, rep, analytic, ok in rows:
        value = rep.empirical_rate if rep.empirical_rate is not None else rep.empirical_mse
        lines.append(f"run {sid}")
        lines.append(f"  trials        = {rep.trials}")
        lines.append(f"  empirical     = {_fmt(value)}")
        lines.append(f"  half_width    = {_fmt(rep.half_width)}")
        lines.append(f"  analytic      = {_fmt(analytic)}")
        if rep.anomaly_fraction is not None:
            lines.append(f"  anomaly_frac  = {_fmt(rep.anomaly_fraction)}")
        lines.append(f"  check         = {'pass' if ok else 'fail'}")
    print("\n".join(lines))

    if args.output is not None:
        header = "scenario,trials,empirical_rate,half_width,analytic_bound,flag"
        csv = "\n".join([header] + [_report_row(sid, rep, analytic, ok)
                                    for sid, rep, analytic, ok in rows]) + "\n"
        _write_text(args.output, csv)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optcorr",
        description="Correlator design and validation for APD optical receivers")
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="optimal correlator at one threshold")
    p_design.add_argument("scenario")
    p_design.add_argument("--theta", type=float, default=None)
    p_design.add_argument("--output", default="w_star.csv",
                          help="waveform CSV path ('-' for stdout)")
    p_design.set_defaults(func=cmd_design)

    p_curve = sub.add_parser("tradeoff", help="exponent curve over a threshold sweep")
    p_curve.add_argument("scenario")
    p_curve.add_argument("--theta-min", type=float, required=True)
    p_curve.add_argument("--theta-max", type=float, required=True)
    p_curve.add_argument("--points", type=int, default=25)
    p_curve.add_argument("--output", default="-")
    p_curve.set_defaults(func=cmd_tradeoff)

    p_sim = sub.add_parser("simulate", help="Monte Carlo validation runs")
    p_sim.add_argument("scenario")
    p_sim.add_argument("--mode", choices=("detect", "delay"), required=True)
    p_sim.add_argument("--output", default=None, help="optional CSV report path")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
