"""Command-line front end: ``keyrate``, ``simulate``, ``estimate``, ``oracle``.

Every command accepts ``--config PATH`` pointing to a flat JSON object whose keys
are the option names below (underscored); explicit flags override file values.

Exit codes: 0 success, 1 configuration error, 2 numeric or physicality failure,
3 I/O or record-format error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import estimation, montecarlo, oracle
from .channel import ChannelParams, DEFAULT_LOSS_DB_PER_KM
from .errors import (DegenerateEstimateError, InsufficientDataError, PhysicalityError,
                     RecordFormatError, TruncationOverflowError)
from .fock import DEFAULT_TAIL_TOLERANCE, TruncationConfig, default_truncation
from .security import ReconciliationConfig, Scheme, key_rate
from .states import ModulationParams

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

DEFAULT_EPSILONS = (0.002, 0.004, 0.006, 0.008, 0.01)
KEYRATE_COLUMNS = ("distance_km", "eta", "epsilon", "ber", "i_ab", "s_bE",
                   "nu1", "nu2", "nu3", "k_rate", "beta_rec", "sift_factor")
KEYRATE_HEADER = (
    "# columns: distance_km (empty in direct-eta mode), eta (transmittance), epsilon "
    "(excess noise, SNU), ber, i_ab (bits/symbol), s_bE (Holevo bound, bits/symbol), "
    "nu1 nu2 (symplectic eigenvalues of gamma_AB), nu3 (conditional), "
    "k_rate (bits/symbol), beta_rec, sift_factor\n"
)


class ConfigError(ValueError):
    pass


def fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def round12(obj):
    """Round every float in a JSON-able structure to 12 significant digits."""
    if isinstance(obj, dict):
        return {k: round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round12(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if not math.isfinite(v) else float(f"{v:.12g}")
    return obj


def dump_json(obj) -> str:
    return json.dumps(round12(obj), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class SweepSpec:
    distances: tuple = tuple(float(d) for d in range(0, 101))
    epsilons: tuple = DEFAULT_EPSILONS
    alpha: float = 0.5
    beta: float = 20.0
    beta_rec: float = 0.8
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM
    scheme: Scheme = Scheme.IMPROVED
    sift: bool = False
    include_alice_error: bool = True
    etas: tuple | None = None  # direct-eta mode replaces the distance grid

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        grids = {"epsilons": self.epsilons}
        if self.etas is None:
            grids["distances"] = self.distances
        else:
            grids["etas"] = self.etas
        for name, grid in grids.items():
            grid = tuple(float(v) for v in grid)
            if not grid:
                raise ConfigError(f"{name} grid is empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} grid must be strictly increasing")
            object.__setattr__(self, name, grid)

    @property
    def sift_factor(self) -> float:
        return 0.5 if self.sift else 1.0

    def points(self):
        """(distance_km or None, ChannelParams) in output order: epsilon-major."""
        for eps in self.epsilons:
            if self.etas is None:
                for d in self.distances:
                    yield d, ChannelParams.from_distance(d, eps, self.loss_db_per_km)
            else:
                for eta in self.etas:
                    yield None, ChannelParams(eta, eps, self.loss_db_per_km)


def sweep(spec: SweepSpec, workers: int = 1):
    mod = ModulationParams(spec.alpha, spec.beta)
    rec = ReconciliationConfig(spec.beta_rec)

    def one(point):
        d, ch = point
        return key_rate(mod, ch, rec, spec.scheme, include_alice_error=spec.include_alice_error,
                        sift_factor=spec.sift_factor, distance_km=d)

    points = list(spec.points())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, points))
    return [one(p) for p in points]


def write_keyrate_csv(reports, fh) -> None:
    fh.write(KEYRATE_HEADER)
    fh.write(",".join(KEYRATE_COLUMNS) + "\n")
    for r in reports:
        d = r.to_dict()
        fh.write(",".join(fmt(d[c]) for c in KEYRATE_COLUMNS) + "\n")


# ------------------------------------------------------------------ argument parsing


def _float_list(text: str) -> list[float]:
    """Comma list ``a,b,c`` or range ``start:stop:step`` (stop inclusive)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = [float(t) for t in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"bad range {text!r}, expected start:stop:step")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(max(n, 0))]
    return [float(t) for t in text.split(",")]


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return cfg


def _merged(args, keys) -> dict:
    cfg = _load_config(args.config)
    unknown = set(cfg) - set(keys)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = dict(cfg)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvqkd4", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scheme_choices):
        p.add_argument("--config", type=Path)
        p.add_argument("--out", type=Path)
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--scheme", choices=scheme_choices)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("keyrate", help="key-rate sweep over distance and excess noise")
    common(p, ["improved", "mixed"])
    p.add_argument("--distances", type=_float_list, help="km; 'a,b,c' or 'start:stop:step'")
    p.add_argument("--etas", type=_float_list, help="direct transmittance grid instead of distances")
    p.add_argument("--epsilons", type=_float_list)
    p.add_argument("--beta-rec", dest="beta_rec", type=float)
    p.add_argument("--loss-db-per-km", dest="loss_db_per_km", type=float)
    p.add_argument("--sift", type=_on_off)
    p.add_argument("--alice-error", dest="include_alice_error", type=_on_off)

    p = sub.add_parser("simulate", help="Monte Carlo run, writes records CSV and summary JSON")
    common(p, ["beamsplitter", "trng"])
    p.add_argument("--seed", type=int)
    p.add_argument("--n-rounds", dest="n_rounds", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--distance", type=float, help="km; sets eta via the fiber loss")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--loss-db-per-km", dest="loss_db_per_km", type=float)
    p.add_argument("--summary", type=Path, help="summary JSON path (default: OUT with .json)")

    p = sub.add_parser("estimate", help="estimate channel and key rate from a records CSV")
    p.add_argument("records", type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--beta-rec", dest="beta_rec", type=float)
    p.add_argument("--sift", type=_on_off)
    p.add_argument("--alice-calibration", dest="calibrated_alice", type=_on_off,
                   help="on: Alice's block from the source model (default); off: all from data")

    p = sub.add_parser("oracle", help="closed forms vs truncated Fock numerics")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--tail-tolerance", dest="tail_tolerance", type=float)
    return parser


# ------------------------------------------------------------------ commands


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_keyrate(args) -> int:
    keys = ("distances", "etas", "epsilons", "alpha", "beta", "beta_rec", "loss_db_per_km",
            "scheme", "sift", "include_alice_error")
    spec = SweepSpec(**_merged(args, keys))
    reports = sweep(spec, args.workers)
    if args.out is None:
        write_keyrate_csv(reports, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            write_keyrate_csv(reports, fh)
    return EXIT_OK


def run_config_from(values: dict) -> montecarlo.RunConfig:
    loss = values.get("loss_db_per_km", DEFAULT_LOSS_DB_PER_KM)
    eps = values.get("epsilon", 0.0)
    if values.get("distance") is not None:
        if values.get("eta") is not None:
            raise ConfigError("give either eta or distance, not both")
        ch = ChannelParams.from_distance(values["distance"], eps, loss)
    else:
        ch = ChannelParams(values.get("eta", 1.0), eps, loss)
    n = values.get("n_rounds", 100_000)
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"n_rounds must be a positive integer, got {n!r}")
    return montecarlo.RunConfig(
        scheme=values.get("scheme", "beamsplitter"),
        n_rounds=n,
        mod=ModulationParams(values.get("alpha", 0.5), values.get("beta", 20.0)),
        ch=ch,
        seed=values.get("seed", 0),
    )


def cmd_simulate(args) -> int:
    keys = ("scheme", "seed", "n_rounds", "alpha", "beta", "eta", "distance", "epsilon",
            "loss_db_per_km")
    cfg = run_config_from(_merged(args, keys))
    if args.out is None:
        raise ConfigError("simulate needs --out")
    records = montecarlo.simulate(cfg, workers=args.workers)
    summary = montecarlo.summarize(records)
    records.write_csv(args.out)
    summary_path = args.summary or Path(args.out).with_suffix(".json")
    payload = {
        "config": {"scheme": cfg.scheme.value, "n_rounds": cfg.n_rounds, "seed": cfg.seed,
                   "alpha": cfg.mod.alpha, "beta": cfg.mod.beta, "eta": cfg.ch.eta,
                   "epsilon": cfg.ch.epsilon},
        "summary": summary.to_dict(),
    }
    Path(summary_path).write_text(dump_json(payload))
    return EXIT_OK


def cmd_estimate(args) -> int:
    values = _merged(args, ("alpha", "beta", "beta_rec", "sift", "calibrated_alice"))
    mod = ModulationParams(values.get("alpha", 0.5), values.get("beta", 20.0))
    rec = ReconciliationConfig(values.get("beta_rec", 0.8))
    sift = 0.5 if values.get("sift", False) else 1.0
    calibrated = values.get("calibrated_alice", True)
    records = montecarlo.Records.read_csv(args.records)
    cov_est = estimation.estimate_covariance(records, mod)
    try:
        channel = estimation.estimate_channel(cov_est, mod).to_dict()
    except DegenerateEstimateError as exc:
        channel = {"error": str(exc)}
    point = estimation.key_rate_from_data(records, mod, rec, calibrated_alice=calibrated,
                                          sift_factor=sift)
    conservative = estimation.key_rate_from_data(records, mod, rec, conservative=True,
                                                 calibrated_alice=calibrated, sift_factor=sift)
    payload = {
        "n_records": len(records),
        "covariance": cov_est.to_dict(),
        "channel": channel,
        "key_rate": point.to_dict(),
        "key_rate_conservative": conservative.to_dict(),
    }
    _emit(dump_json(payload), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    values = _merged(args, ("alpha", "beta", "dim", "tail_tolerance"))
    alpha, beta = values.get("alpha", 0.5), values.get("beta", 1.0)
    if alpha < 0 or beta < 0:
        raise ConfigError("alpha and beta must be >= 0")
    if alpha > 2 or beta > 2:
        raise ConfigError("oracle checks are limited to alpha, beta <= 2")
    trunc = default_truncation()
    trunc = TruncationConfig(values.get("dim", trunc.dim),
                             values.get("tail_tolerance", DEFAULT_TAIL_TOLERANCE))
    report = oracle.run_oracle_checks(alpha, beta, trunc)
    _emit(dump_json(report), args.out)
    return EXIT_OK if report["passed"] else EXIT_NUMERIC


COMMANDS = {"keyrate": cmd_keyrate, "simulate": cmd_simulate,
            "estimate": cmd_estimate, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except TruncationOverflowError as exc:
        hint = f" (suggested --dim {exc.suggested_dim})" if exc.suggested_dim else ""
        print(f"error: {exc}{hint}", file=sys.stderr)
        return EXIT_NUMERIC
    except (PhysicalityError, DegenerateEstimateError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RecordFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
