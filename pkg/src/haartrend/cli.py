"""Command line front end: ``haartrend <subcommand> [options]``.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical error.
Numeric options can also come from a flat ``key = value`` config file given by
``--config`` or the ``HAARTREND_CONFIG`` environment variable; a flag on the
command line always wins over the file, and the file over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import ConfigError, HaarTrendError
from .grid import index_set
from .io import CONFIG_ENV, load_series, read_config, write_report, write_rows
from .oracle import NOISE_LAWS, SparseModelSpec, bayes_risk_exact, make_estimator, mc_risk
from .plm import fit_plm
from .shrinkage import ThresholdPolicy, apply_policy, critical_scale, estimate_trend, sn_diagnostic
from .simulation import (
    DEFAULT_B_GRID,
    DEFAULT_K_GRID,
    AR1Noise,
    KernelFamily,
    WaveletFamily,
    grid_search_mse,
    monte_carlo_compare,
    scenario_truth,
    scott_bandwidth,
    tail_majorant_check,
)
from .transform import analyze, write_coefficients

log = logging.getLogger("haartrend")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive(kind):
    def check(value):
        v = kind(value)
        if not v > 0:
            raise ValueError("must be positive")
        return v

    return check


def _open_unit(value):
    v = float(value)
    if not 0 < v < 1:
        raise ValueError("must lie in (0, 1)")
    return v


def _ar(value):
    v = float(value)
    if not abs(v) < 1:
        raise ValueError("must satisfy |a| < 1")
    return v


def _sample_size(value):
    v = int(value)
    if v < 2:
        raise ValueError("must be at least 2")
    return v


def _choice(*options):
    def check(value):
        if value not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return value

    return check


def _name_list(value):
    items = [v.strip() for v in str(value).split(",") if v.strip()]
    allowed = {"soft", "hard", "rectangular", "epanechnikov"}
    bad = [v for v in items if v not in allowed]
    if bad or not items:
        raise ValueError(f"unknown estimator(s) {bad}; choose from {sorted(allowed)}")
    return tuple(items)


# key -> (parser/validator, built-in default)
OPTIONS: dict[str, tuple[Callable[[Any], Any], Any]] = {
    "seed": (int, 0),
    "rule": (_choice("soft", "hard"), "soft"),
    "K": (_positive(float), 0.1),
    "period": (_positive(int), 12),
    "n": (_sample_size, 1000),
    "reps": (_positive(int), 200),
    "ar": (_ar, 0.7),
    "sigma2": (_positive(float), 0.01),
    "epsilon": (_positive(float), 1.0),
    "q": (_open_unit, 0.125),
    "N": (_positive(int), 100_000),
    "estimator": (_choice("bayes", "soft", "hard", "half"), "bayes"),
    "noise": (_choice(*NOISE_LAWS), "three_point"),
    "gamma": (_positive(float), 4.0),
    "workers": (_positive(int), 1),
    "estimators": (_name_list, "soft,rectangular,epanechnikov"),
    "bandwidth": (_positive(float), None),
}


@dataclass
class RunConfig:
    """Resolved settings for one invocation."""

    subcommand: str
    values: dict[str, Any] = field(default_factory=dict)
    sources: dict[str, str] = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None


def resolve_config(subcommand: str, cli: dict[str, Any], file_values: dict[str, str], keys) -> RunConfig:
    """Merge flag > config file > default and validate every value."""
    cfg = RunConfig(subcommand)
    for key in keys:
        parse, default = OPTIONS[key]
        if cli.get(key) is not None:
            raw, src = cli[key], "flag"
        elif key in file_values:
            raw, src = file_values[key], "config"
        else:
            raw, src = default, "default"
        if raw is None:
            value = None
        else:
            try:
                value = parse(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid {key} = {raw!r} (from {src}): {exc}") from None
        cfg.values[key] = value
        cfg.sources[key] = src
    return cfg


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="haartrend",
        description="Trend estimation with Haar-type wavelets for arbitrary sample sizes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def common(p, *keys):
        p.add_argument("--config", help=f"flat key=value config file (default: ${CONFIG_ENV})")
        p.add_argument("--seed", type=str, help="master random seed (default 0)")
        if "rule" in keys:
            p.add_argument("--rule", help="thresholding rule: soft or hard (default soft)")
        if "K" in keys:
            p.add_argument("--K", help="threshold constant K > 0 (default 0.1)")

    p = sub.add_parser("denoise", help="thresholded wavelet estimate of a series' trend")
    common(p, "rule", "K")
    p.add_argument("--input", required=True, help="CSV with label,value rows")
    p.add_argument("--output", required=True, help="CSV with columns t,y,fitted")
    p.add_argument("--coeffs-out", help="optional coefficient dump (j,k,beta)")

    p = sub.add_parser("fit-plm", help="linear trend + seasonal + wavelet remainder")
    common(p, "rule", "K")
    p.add_argument("--input", required=True, help="CSV with date,value or t,y rows")
    p.add_argument("--period", help="seasonal period, e.g. 12 for monthly data (default 12)")
    p.add_argument("--output", required=True, help="CSV with t,y,linear_seasonal,m_hat,fitted")
    p.add_argument("--json-out", help="sidecar JSON path (default: output with .json suffix)")

    p = sub.add_parser("simulate", help="Monte Carlo comparison with kernel regression")
    common(p, "K")
    p.add_argument("--scenario", default="f", help="f, g or file (default f)")
    p.add_argument("--truth-file", help="CSV trend used when --scenario file")
    p.add_argument("--n", help="sample size (default 1000)")
    p.add_argument("--reps", help="Monte Carlo replicates (default 200)")
    p.add_argument("--estimators", help="comma list from soft,hard,rectangular,epanechnikov")
    p.add_argument("--grid-search", action="store_true", help="tune every estimator by MSE grid search")
    p.add_argument("--bandwidth", help="kernel bandwidth without grid search (default: Scott's rule)")
    p.add_argument("--ar", help="AR(1) coefficient (default 0.7)")
    p.add_argument("--sigma2", help="innovation variance (default 0.01)")
    p.add_argument("--workers", help="worker threads (default 1)")
    p.add_argument("--out-dir", required=True, help="directory for risk_table.csv etc.")

    p = sub.add_parser("oracle", help="Monte Carlo risk in the sparse three-point model")
    common(p)
    p.add_argument("--epsilon", help="noise level (default 1)")
    p.add_argument("--q", help="sparsity in (0, 1) (default 0.125)")
    p.add_argument("--N", help="coordinates per replicate (default 100000)")
    p.add_argument("--reps", help="replicates (default 200)")
    p.add_argument("--estimator", help="bayes, soft, hard or half (default bayes)")
    p.add_argument("--noise", help=f"noise law: {', '.join(NOISE_LAWS)} (default three_point)")
    p.add_argument("--K", help="threshold t = K * lambda for soft/hard (default 1)")
    p.add_argument("--output", help="write JSON here instead of stdout")

    p = sub.add_parser("diagnose", help="bias and tail diagnostics for a series")
    common(p, "rule", "K")
    p.add_argument("--input", required=True, help="CSV with label,value rows")
    p.add_argument("--period", help="fit the partially linear model first with this period")
    p.add_argument("--gamma", help="tail exponent for the majorant check (default 4)")
    p.add_argument("--output", help="write JSON here instead of stdout")
    return parser


def _config_file(args) -> dict[str, str]:
    path = args.config or os.environ.get(CONFIG_ENV)
    return read_config(path) if path else {}


def _cli_values(args) -> dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k in OPTIONS}


def _cmd_denoise(args, cfg: RunConfig) -> None:
    series = load_series(args.input)
    policy = ThresholdPolicy(cfg.rule, cfg.K)
    fitted = estimate_trend(series.values, policy)
    write_rows(
        ({"t": lab, "y": y, "fitted": f} for lab, y, f in zip(series.labels, series.values, fitted)),
        args.output,
        ["t", "y", "fitted"],
    )
    if args.coeffs_out:
        write_coefficients(apply_policy(analyze(series.values), policy), args.coeffs_out)
    log.info("denoised %d points (J*=%d)", series.n, critical_scale(series.n))


def _cmd_fit_plm(args, cfg: RunConfig) -> None:
    series = load_series(args.input)
    policy = ThresholdPolicy(cfg.rule, cfg.K)
    fit = fit_plm(series.values, cfg.period, policy)
    write_rows(
        (
            {"t": lab, "y": y, "linear_seasonal": ls, "m_hat": m, "fitted": f}
            for lab, y, ls, m, f in zip(series.labels, series.values, fit.linear_seasonal, fit.m_hat, fit.fitted)
        ),
        args.output,
        ["t", "y", "linear_seasonal", "m_hat", "fitted"],
    )
    sidecar = args.json_out or str(Path(args.output).with_suffix(".json"))
    n = series.n
    write_report(
        {
            "n": n,
            "period": cfg.period,
            "rule": cfg.rule,
            "K": cfg.K,
            "gamma_hat": fit.gamma_hat,
            "J_n": index_set(n).J_n,
            "J_star": critical_scale(n),
            "nonzero_coefficients": int(np.count_nonzero(fit.residual_coeffs.beta)),
            "residual_mean_square": float(np.mean((series.values - fit.fitted) ** 2)),
            "max_abs_design_residual_inner_product": float(
                np.max(np.abs(fit.design.X.T @ (series.values - fit.linear_seasonal)))
            ),
        },
        sidecar,
        "json",
    )


def _cmd_simulate(args, cfg: RunConfig) -> None:
    if args.scenario == "file":
        if not args.truth_file:
            raise ConfigError("--scenario file requires --truth-file")
        truth = load_series(args.truth_file).values
    elif args.scenario in ("f", "g", "step"):
        truth = scenario_truth(args.scenario, cfg.n)
    else:
        raise ConfigError(f"unknown scenario {args.scenario!r}")
    n = truth.size
    noise = AR1Noise(cfg.ar, cfg.sigma2)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    chosen, curves = [], []
    for name in cfg.estimators:
        wavelet = name in ("soft", "hard")
        family = WaveletFamily(name) if wavelet else KernelFamily(name)
        if args.grid_search:
            grid = DEFAULT_K_GRID if wavelet else DEFAULT_B_GRID
            res = grid_search_mse(family, truth, noise, grid, cfg.reps, seed=cfg.seed, workers=cfg.workers)
            for v, m, se in zip(res.grid, res.mean, res.std_error):
                curves.append({"estimator": family.name, "param": v, "mean_mse": m, "std_error": se})
            value = res.best
            log.info("%s: best %s = %.4g", family.name, family.param_name, value)
        elif wavelet:
            value = cfg.K
        else:
            value = cfg.bandwidth or scott_bandwidth(np.arange(1, n + 1) / n, name)
        chosen.append((family, value))

    table = monte_carlo_compare(truth, chosen, noise, cfg.reps, seed=cfg.seed, workers=cfg.workers)
    write_rows(
        table.summary(),
        out / "risk_table.csv",
        ["estimator", "param", "median", "mean", "q1", "q3", "std_error", "replicates"],
    )
    write_rows(table.boxplot_rows(), out / "boxplot_data.csv", ["estimator", "replicate", "mse"])
    write_rows(curves, out / "curves.csv", ["estimator", "param", "mean_mse", "std_error"])


def _emit_json(payload, output) -> None:
    if output:
        write_report(payload, output, "json")
    else:
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")


def _cmd_oracle(args, cfg: RunConfig) -> None:
    spec = SparseModelSpec(cfg.epsilon, cfg.q, cfg.N)
    K = cfg.K if cfg.sources["K"] != "default" else 1.0
    est = make_estimator(cfg.estimator, spec, K)
    risk = mc_risk(est, spec, cfg.reps, seed=cfg.seed, noise=cfg.noise)
    _emit_json(
        {"mean": risk.mean, "se": risk.std_error, "exact_bayes_risk": bayes_risk_exact(cfg.epsilon, cfg.q)},
        args.output,
    )


def _cmd_diagnose(args, cfg: RunConfig) -> None:
    series = load_series(args.input)
    policy = ThresholdPolicy(cfg.rule, cfg.K)
    n = series.n
    if args.period:
        period = OPTIONS["period"][0](args.period)
        fit = fit_plm(series.values, period, policy)
        residual = series.values - fit.linear_seasonal
        m_hat = fit.m_hat
    else:
        residual = series.values
        m_hat = estimate_trend(series.values, policy)
    coeffs = analyze(residual - m_hat)
    iset = index_set(n)
    fine = iset.j >= critical_scale(n)
    scaled = np.sqrt(n) * coeffs.beta[fine]
    report: dict[str, Any] = {
        "n": n,
        "J_n": iset.J_n,
        "J_star": critical_scale(n),
        "K": cfg.K,
        "sn_of_fit": sn_diagnostic(m_hat, cfg.K),
        "scaled_sn_of_fit": sn_diagnostic(m_hat, cfg.K) * n ** (2.0 / 3.0),
        "fine_scale_coefficients": int(scaled.size),
    }
    if scaled.size >= 1000:
        tail = tail_majorant_check(scaled, cfg.gamma)
        report["tail"] = {"gamma": tail.gamma, "C": tail.C, "dominated": tail.dominated, "violations": tail.violations.size}
    else:
        report["tail"] = {"gamma": cfg.gamma, "skipped": "fewer than 1000 fine-scale coefficients"}
    _emit_json(report, args.output)


COMMANDS = {
    "denoise": (_cmd_denoise, ("seed", "rule", "K")),
    "fit-plm": (_cmd_fit_plm, ("seed", "rule", "K", "period")),
    "simulate": (
        _cmd_simulate,
        ("seed", "K", "n", "reps", "ar", "sigma2", "workers", "estimators", "bandwidth"),
    ),
    "oracle": (_cmd_oracle, ("seed", "epsilon", "q", "N", "reps", "estimator", "noise", "K")),
    "diagnose": (_cmd_diagnose, ("seed", "rule", "K", "gamma")),
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handler, keys = COMMANDS[args.command]
    try:
        cfg = resolve_config(args.command, _cli_values(args), _config_file(args), keys)
        log.info("settings: %s", ", ".join(f"{k}={cfg.values[k]} ({cfg.sources[k]})" for k in keys))
        handler(args, cfg)
    except HaarTrendError as exc:
        print(f"haartrend {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"haartrend {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
