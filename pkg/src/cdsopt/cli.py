"""Command-line tables for single-name, index, recovery and copula pricing.

Usage::

    cdsopt single --config fig2.json [--scan 500:0:6] [--out fig2.csv]
    cdsopt index --config ig13.json [--mode implied-vol --quotes quotes.csv]
    cdsopt recovery --config fig1.json --mode density|price|fit [--samples s.csv]
    cdsopt copula-sample --config cop.json --n 1000 --seed 7
    cdsopt validate --config fig2.json

Spreads are given in basis points in the config; premiums are written in
basis points of notional. Exit codes: 0 success, 2 bad config, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special

from .copula import FactorModel, sample_joint, write_samples_csv
from .curves import CreditCurve, bp, calibrate_flat_rate, parse_date, year_fraction
from .index import (
    IndexState,
    IndexStrike,
    PremiumBoundsError,
    implied_pv_vol,
    scan_strikes,
)
from .numerics import BracketError, ConvergenceError, QuadratureRule, norm_cdf
from .recovery import (
    RecoveryParams,
    RecoveryQuote,
    fit_params,
    read_samples_csv,
    recovery_density,
    recovery_option_pv,
    recovery_swap_pv,
)
from .single_name import (
    CalibrationError,
    OptionSpec,
    calibrate_epsilon,
    price_ko_upfront_running,
    price_nko_upfront_running,
    upfront_equivalent,
)
from .validation import oracle_black76, oracle_index_terminal, oracle_recovery_mc

log = logging.getLogger("cdsopt")

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _get(cfg: dict, key: str, path: str, default=...):
    if key in cfg:
        return cfg[key]
    if default is ...:
        raise ConfigError(f"{path}.{key}" if path else key, "missing")
    return default


def _number(cfg, key, path="", default=...):
    value = _get(cfg, key, path, default)
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}" if path else key, f"not a number: {value!r}") from None


def _date(cfg, key, path=""):
    value = _get(cfg, key, path)
    try:
        return parse_date(value)
    except ValueError:
        raise ConfigError(f"{path}.{key}" if path else key, f"not an ISO date: {value!r}") from None


@dataclass
class MarketConfig:
    """Validated view over the JSON config document."""

    raw: dict

    @classmethod
    def load(cls, path) -> "MarketConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config", "top level must be an object")
        return cls(raw)

    @property
    def valuation_date(self):
        return _date(self.raw, "valuation_date")

    @property
    def expiry(self):
        return _date(self.raw, "expiry")

    @property
    def maturity(self):
        return _date(self.raw, "maturity")

    @property
    def vol(self) -> float:
        v = _number(self.raw, "vol")
        if not v > 0:
            raise ConfigError("vol", "must be positive")
        return v

    def rule(self, nodes: int | None = None) -> QuadratureRule:
        n = int(nodes or self.raw.get("nodes", 128))
        try:
            return QuadratureRule(node_count=n)
        except ValueError as exc:
            raise ConfigError("nodes", str(exc)) from None

    def curve(self) -> CreditCurve:
        spot = bp(_number(self.raw, "spot_spread_bp"))
        recovery = _number(self.raw, "marking_recovery")
        leg = self.raw.get("premium_leg", "continuous")
        val = self.valuation_date
        if "target_rpv01" in self.raw:
            t1 = year_fraction(val, self.expiry)
            t2 = year_fraction(val, self.maturity)
            # the target annuity may be quoted at another spread level than spot
            level = bp(_number(self.raw, "calibration_spread_bp", "", self.raw["spot_spread_bp"]))
            rate = calibrate_flat_rate(_number(self.raw, "target_rpv01"), level, recovery,
                                       t1, t2, premium_leg=leg)
        else:
            rate = _number(self.raw, "riskfree_rate")
        try:
            return CreditCurve(val, rate, spot, recovery, premium_leg=leg)
        except ValueError as exc:
            raise ConfigError("curve", str(exc)) from None

    def recovery(self) -> RecoveryParams:
        rec = _get(self.raw, "recovery", "")
        try:
            if "a" in rec:
                return RecoveryParams(_number(rec, "a", "recovery"), _number(rec, "b", "recovery"))
            return RecoveryParams.from_mean(_number(rec, "mean", "recovery"),
                                            _number(rec, "b", "recovery"))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("recovery", str(exc)) from None

    def index_state(self) -> IndexState:
        idx = _get(self.raw, "index", "")
        p = "index"
        if "price" in idx:
            quote, quote_type = _number(idx, "price", p), "price"
        else:
            quote, quote_type = bp(_number(idx, "spread_bp", p)), "spread"
        n00 = int(_number(idx, "original_names", p))
        try:
            return IndexState(
                original_names=n00,
                names_at_strike=int(_number(idx, "names_at_strike", p, n00)),
                names_now=int(_number(idx, "names_now", p, _number(idx, "names_at_strike", p, n00))),
                accrued_loss=_number(idx, "accrued_loss", p, 0.0),
                coupon=bp(_number(idx, "coupon_bp", p)),
                quote=quote,
                quote_type=quote_type,
                valuation_date=self.valuation_date,
                strike_date=idx.get("strike_date"),
                expiry=self.expiry,
                maturity=self.maturity,
                marking_recovery=_number(idx, "recovery", p, 0.4),
                riskfree_rate=_number(self.raw, "riskfree_rate", "", 0.0),
                default_dates=idx.get("default_dates"),
                default_leg_names=idx.get("default_leg_names"),
            )
        except ValueError as exc:
            raise ConfigError(p, str(exc)) from None

    def index_strikes(self, state: IndexState) -> list[IndexStrike]:
        idx = self.raw["index"]
        if state.quote_type == "price":
            return [IndexStrike.from_price(float(k)) for k in _get(idx, "strikes_price", "index")]
        return [IndexStrike(spread=bp(float(k))) for k in _get(idx, "strikes_bp", "index")]


def parse_scan(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, steps = text.split(":")
        steps = int(steps)
        if steps < 1:
            raise ValueError
        return float(lo), float(hi), steps
    except ValueError:
        raise ConfigError("--scan", f"expected lo:hi:steps, got {text!r}") from None


def _write_rows(rows: list[dict], out) -> None:
    if not rows:
        return
    writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})


def single_rows(cfg: MarketConfig, scan: str | None = None, nodes: int | None = None) -> list[dict]:
    """Premiums in bp for a running-to-upfront strike scan (running part in bp)."""
    curve = cfg.curve()
    rule = cfg.rule(nodes)
    rec = cfg.recovery()
    sigma = cfg.vol
    total_bp = _number(cfg.raw, "strike_bp", "", cfg.raw["spot_spread_bp"])
    lo, hi, steps = parse_scan(scan) if scan else (total_bp, 0.0, 6)
    running = [lo] if steps == 1 else list(np.linspace(lo, hi, steps))
    t_e = curve.time(cfg.expiry)
    t_m = curve.time(cfg.maturity)
    eps = calibrate_epsilon(curve, t_e, t_m, sigma, rule)
    rows = []
    for run_bp in running:
        if not 0 <= run_bp <= total_bp:
            raise ConfigError("--scan", f"running strike {run_bp}bp outside [0, {total_bp}]")
        upfront = upfront_equivalent(curve, cfg.expiry, cfg.maturity, bp(total_bp - run_bp))
        row = {"upfront_strike": upfront, "running_strike_bp": float(run_bp)}
        for side in ("payer", "receiver"):
            spec = OptionSpec(cfg.expiry, cfg.maturity, bp(run_bp), upfront, side)
            ko = price_ko_upfront_running(curve, spec, sigma, rule, epsilon=eps)
            nko = price_nko_upfront_running(curve, spec, sigma, rule, rec, epsilon=eps)
            row[f"ko_{side}_bp"] = ko.premium * 1e4
            row[f"nko_{side}_bp"] = nko.premium * 1e4
        rows.append({k: row[k] for k in ("upfront_strike", "running_strike_bp", "ko_payer_bp",
                                          "nko_payer_bp", "ko_receiver_bp", "nko_receiver_bp")})
    return rows


def index_rows(cfg: MarketConfig, mode: str = "price", quotes=None) -> list[dict]:
    state = cfg.index_state()
    sigma = cfg.vol if mode == "price" else None
    if mode == "price":
        rows = scan_strikes(state, cfg.index_strikes(state), sigma)
        spread_quoted = state.quote_type == "spread"
        return [{"strike": r["strike"] * 1e4 if spread_quoted else 100.0 * (1.0 - r["strike"]), "payer_bp": r["payer"] * 1e4,
                 "receiver_bp": r["receiver"] * 1e4, "delta": r["delta"],
                 "parity_residual": r["parity_residual"]} for r in rows]
    if quotes is None:
        raise ConfigError("--quotes", "implied-vol mode needs a quotes CSV")
    rows = []
    with Path(quotes).open(newline="") as fh:
        for i, q in enumerate(csv.DictReader(fh)):
            try:
                k = float(q["strike"])
                side = q["side"].strip()
                premium_bp = float(q["premium"])
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"quotes[{i}]", f"bad row {q}: {exc}") from None
            strike = (IndexStrike(spread=bp(k)) if state.quote_type == "spread"
                      else IndexStrike.from_price(k))
            try:
                vol = implied_pv_vol(state, strike, premium_bp * 1e-4, side)
                rows.append({"strike": k, "side": side, "premium_bp": premium_bp,
                             "implied_pv_vol": vol})
            except (PremiumBoundsError, BracketError) as exc:
                rows.append({"strike": k, "side": side, "premium_bp": premium_bp,
                             "implied_pv_vol": f"error: {exc}"})
    return rows


def recovery_rows(cfg: MarketConfig, mode: str, samples=None, grid: int = 1601) -> list[dict]:
    if mode == "density":
        rec = _get(cfg.raw, "recovery", "")
        mean = _number(rec, "mean", "recovery", None)
        a = _number(rec, "a", "recovery", None)
        mean = mean if mean is not None else norm_cdf(a)
        widths = rec.get("b_values") or [_number(rec, "b", "recovery")]
        # probit spacing resolves the steep shoulder near zero recovery
        xs = np.concatenate([[0.0], special.ndtr(np.linspace(-9.0, 9.0, grid)), [1.0]])
        params = [RecoveryParams.from_mean(mean, float(b)) for b in widths]
        return [{"x": float(x), **{f"density_b{b:g}": recovery_density(p, float(x))
                                   for b, p in zip(widths, params)}} for x in xs]
    if mode == "price":
        curve = cfg.curve()
        params = cfg.recovery()
        strikes = cfg.raw.get("recovery", {}).get("strikes", [0.2])
        rows = []
        for k in strikes:
            quote = RecoveryQuote(float(k), cfg.expiry)
            rows.append({"strike": float(k),
                         "call_bp": recovery_option_pv(curve, params, quote, "call") * 1e4,
                         "put_bp": recovery_option_pv(curve, params, quote, "put") * 1e4,
                         "swap_bp": recovery_swap_pv(curve, params, quote) * 1e4})
        return rows
    if mode == "fit":
        if samples is None:
            raise ConfigError("--samples", "fit mode needs a samples CSV")
        values = read_samples_csv(samples)
        mean = cfg.raw.get("recovery", {}).get("fixed_mean")
        res = fit_params(values, None if mean is None else float(mean))
        return [{"a": res.params.a, "b": res.params.b, "mean": res.params.mean,
                 "ks_statistic": res.ks_statistic, "n": len(values)}]
    raise ConfigError("--mode", f"unknown recovery mode {mode!r}")


def validate_reports(cfg: MarketConfig, seed: int = 12345, paths: int = 1_000_000) -> list[dict]:
    reports = []
    if "spot_spread_bp" in cfg.raw:
        curve = cfg.curve()
        for side in ("payer", "receiver"):
            spec = OptionSpec(cfg.expiry, cfg.maturity,
                              bp(_number(cfg.raw, "strike_bp", "", cfg.raw["spot_spread_bp"])),
                              0.0, side)
            reports.append(oracle_black76(curve, spec, cfg.vol))
    if "recovery" in cfg.raw:
        params = cfg.recovery()
        for u in (0.1, params.mean, 0.6):
            reports.append(oracle_recovery_mc(params, u, paths, seed))
    if "index" in cfg.raw:
        state = cfg.index_state()
        for k in cfg.index_strikes(state):
            reports.append(oracle_index_terminal(state, k, cfg.vol, paths, seed))
    out = []
    for r in reports:
        row = r.to_dict()
        # Monte Carlo reports are judged in standard errors, quadrature ones relatively
        row["passed"] = r.within(3.0) if r.standard_error > 0 else r.rel_err <= 1e-6
        out.append(row)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdsopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path)
        p.add_argument("--nodes", type=int)
        p.add_argument("--seed", type=int)
        return p

    common(sub.add_parser("single", help="single-name KO/NKO strike scan"))
    sub.choices["single"].add_argument("--scan", help="running strike lo:hi:steps in bp")
    p = common(sub.add_parser("index", help="index option prices or implied PV vols"))
    p.add_argument("--mode", choices=("price", "implied-vol"), default="price")
    p.add_argument("--quotes", type=Path)
    p = common(sub.add_parser("recovery", help="recovery densities, option PVs or fits"))
    p.add_argument("--mode", choices=("density", "price", "fit"), default="density")
    p.add_argument("--samples", type=Path)
    p = common(sub.add_parser("copula-sample", help="simulate joint default and recovery"))
    p.add_argument("--n", type=int, default=1000)
    p = common(sub.add_parser("validate", help="run oracle checks, JSON report"))
    p.add_argument("--paths", type=int, default=1_000_000)
    return parser


def _run(args) -> int:
    cfg = MarketConfig.load(args.config)
    seed = args.seed if args.seed is not None else int(cfg.raw.get("seed", 12345))
    out = io.StringIO()
    if args.command == "single":
        _write_rows(single_rows(cfg, args.scan, args.nodes), out)
    elif args.command == "index":
        _write_rows(index_rows(cfg, args.mode, args.quotes), out)
    elif args.command == "recovery":
        _write_rows(recovery_rows(cfg, args.mode, args.samples), out)
    elif args.command == "copula-sample":
        cop = _get(cfg.raw, "copula", "")
        try:
            model = FactorModel(_number(cop, "pbar", "copula"), _number(cop, "rho", "copula"),
                                _number(cop, "beta", "copula"))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("copula", str(exc)) from None
        sample = sample_joint(model, cfg.recovery(), args.n, seed,
                              names=int(cop.get("names", 1)), rule=cfg.rule(args.nodes))
        if args.out is None:
            raise ConfigError("--out", "copula-sample writes a CSV file; give --out")
        write_samples_csv(sample, args.out)
        return 0
    elif args.command == "validate":
        reports = validate_reports(cfg, seed, args.paths)
        json.dump(reports, out, indent=2)
        out.write("\n")
        if not all(r["passed"] for r in reports):
            _emit(out.getvalue(), args.out)
            log.error("oracle disagreement in %s", [r["name"] for r in reports if not r["passed"]])
            return EXIT_NUMERICAL
    _emit(out.getvalue(), args.out)
    return 0


def _emit(text: str, path: Path | None) -> None:
    if path:
        path.write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (BracketError, ConvergenceError, CalibrationError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
