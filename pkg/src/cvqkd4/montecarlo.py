"""Round-by-round simulation of the two prepare-and-measure realizations.

Random numbers come from a counter-based generator: rounds are grouped into
fixed blocks of ``BLOCK_SIZE`` and block ``b`` draws from
``Philox(key=(b << 64) | seed)``. A round's randomness therefore depends only on
``(seed, round_index)``, and results do not depend on how blocks are scheduled.
"""
from __future__ import annotations

import csv
import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from .channel import ChannelParams
from .errors import InsufficientDataError, RecordFormatError
from .states import ModulationParams, THETAS, conditional_coefficients, heterodyne_means

BLOCK_SIZE = 1 << 16
_MASK64 = (1 << 64) - 1

CSV_COLUMNS = ("round", "m", "x_a", "p_a", "bob_basis", "bob_value", "alice_bit", "bob_bit")


class PMScheme(str, enum.Enum):
    BEAMSPLITTER = "beamsplitter"
    TRNG = "trng"


@dataclass(frozen=True)
class RunConfig:
    scheme: PMScheme = PMScheme.BEAMSPLITTER
    n_rounds: int = 100_000
    mod: ModulationParams = field(default_factory=ModulationParams)
    ch: ChannelParams = field(default_factory=lambda: ChannelParams(1.0, 0.0))
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", PMScheme(self.scheme))
        if int(self.n_rounds) != self.n_rounds or self.n_rounds < 1:
            raise ValueError(f"n_rounds must be a positive integer, got {self.n_rounds}")


@dataclass(frozen=True)
class TrialRecord:
    m: int
    x_a: float
    p_a: float
    bob_basis: str
    bob_value: float
    alice_bit: int
    bob_bit: int


@dataclass
class Records:
    """Columnar store of simulated rounds. ``bob_basis`` is 0 for x and 1 for p."""

    m: np.ndarray
    x_a: np.ndarray
    p_a: np.ndarray
    bob_basis: np.ndarray
    bob_value: np.ndarray

    def __len__(self) -> int:
        return self.m.shape[0]

    @property
    def alice_value(self) -> np.ndarray:
        """Alice's raw homodyne value in the quadrature Bob measured."""
        return np.where(self.bob_basis == 0, self.x_a, self.p_a)

    @property
    def alice_bit(self) -> np.ndarray:
        return np.signbit(self.alice_value).astype(np.int8)

    @property
    def bob_bit(self) -> np.ndarray:
        return np.signbit(self.bob_value).astype(np.int8)

    def __iter__(self) -> Iterator[TrialRecord]:
        ab, bb = self.alice_bit, self.bob_bit
        for i in range(len(self)):
            yield TrialRecord(int(self.m[i]), float(self.x_a[i]), float(self.p_a[i]),
                              "xp"[self.bob_basis[i]], float(self.bob_value[i]),
                              int(ab[i]), int(bb[i]))

    def subset(self, mask) -> "Records":
        return Records(self.m[mask], self.x_a[mask], self.p_a[mask],
                       self.bob_basis[mask], self.bob_value[mask])

    @classmethod
    def concatenate(cls, parts) -> "Records":
        parts = list(parts)
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("m", "x_a", "p_a", "bob_basis", "bob_value")))

    def write_csv(self, path) -> None:
        ab, bb = self.alice_bit, self.bob_bit
        with open(path, "w", newline="") as fh:
            fh.write("# columns: round (index), m (prepared state 0..3), x_a p_a (Alice raw "
                     "heterodyne, shot-noise units), bob_basis (x|p), bob_value, "
                     "alice_bit bob_bit (1 = negative sign)\n")
            fh.write(",".join(CSV_COLUMNS) + "\n")
            rows = (
                f"{i},{m},{xa:.12g},{pa:.12g},{'xp'[b]},{bv:.12g},{a},{c}\n"
                for i, (m, xa, pa, b, bv, a, c) in enumerate(zip(
                    self.m.tolist(), self.x_a.tolist(), self.p_a.tolist(),
                    self.bob_basis.tolist(), self.bob_value.tolist(), ab.tolist(), bb.tolist()))
            )
            fh.writelines(rows)

    @classmethod
    def read_csv(cls, path) -> "Records":
        cols = {k: [] for k in ("m", "x_a", "p_a", "bob_basis", "bob_value")}
        header_seen = False
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or row[0].startswith("#"):
                    continue
                if not header_seen:
                    if tuple(c.strip() for c in row) != CSV_COLUMNS:
                        raise RecordFormatError(f"unexpected header {row}", lineno)
                    header_seen = True
                    continue
                if len(row) != len(CSV_COLUMNS):
                    raise RecordFormatError(f"expected {len(CSV_COLUMNS)} fields, got {len(row)}", lineno)
                try:
                    m = int(row[1])
                    basis = {"x": 0, "p": 1}[row[4].strip()]
                    vals = float(row[2]), float(row[3]), float(row[5])
                except (ValueError, KeyError) as exc:
                    raise RecordFormatError(f"cannot parse record: {exc}", lineno) from None
                if not 0 <= m <= 3:
                    raise RecordFormatError(f"m out of range: {m}", lineno)
                cols["m"].append(m)
                cols["x_a"].append(vals[0])
                cols["p_a"].append(vals[1])
                cols["bob_basis"].append(basis)
                cols["bob_value"].append(vals[2])
        if not header_seen:
            raise RecordFormatError("missing header row")
        return cls(np.array(cols["m"], dtype=np.int8), np.array(cols["x_a"]),
                   np.array(cols["p_a"]), np.array(cols["bob_basis"], dtype=np.int8),
                   np.array(cols["bob_value"]))


@dataclass(frozen=True)
class RunSummary:
    n: int
    empirical_ber: float
    moments: dict

    def to_dict(self) -> dict:
        return asdict(self)


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(block << 64) | (seed & _MASK64)))


def _alice_beamsplitter(rng, n, beta):
    m = rng.integers(0, 4, n)
    mx, mp = heterodyne_means(beta)
    x_a = mx[m] + rng.standard_normal(n)
    p_a = mp[m] + rng.standard_normal(n)
    return m, x_a, p_a


def _alice_trng(rng, n, beta):
    # x_A and p_A drawn from their marginals independently, then m ~ C_m(x_A, p_A)
    x_a = beta * (1 - 2 * rng.integers(0, 2, n)) + rng.standard_normal(n)
    p_a = beta * (1 - 2 * rng.integers(0, 2, n)) + rng.standard_normal(n)
    cum = np.cumsum(conditional_coefficients(x_a, p_a, beta), axis=1)
    u = rng.random(n)
    m = np.minimum((u[:, None] > cum).sum(axis=1), 3)
    return m, x_a, p_a


def _simulate_block(scheme: PMScheme, block: int, n: int, mod: ModulationParams,
                    channel, seed: int) -> Records:
    rng = block_rng(seed, block)
    if scheme is PMScheme.BEAMSPLITTER:
        m, x_a, p_a = _alice_beamsplitter(rng, n, mod.beta)
    else:
        m, x_a, p_a = _alice_trng(rng, n, mod.beta)
    basis = rng.integers(0, 2, n)
    mean_x = 2 * mod.alpha * np.cos(THETAS)[m]
    mean_p = 2 * mod.alpha * np.sin(THETAS)[m]
    x_b, p_b = channel.transmit(mean_x, mean_p, rng)
    bob = np.where(basis == 0, x_b, p_b)
    return Records(m.astype(np.int8), x_a, p_a, basis.astype(np.int8), bob)


def simulate(cfg: RunConfig, workers: int = 1, channel=None) -> Records:
    """Generate all rounds of ``cfg``.

    ``channel`` overrides ``cfg.ch`` with any object exposing
    ``transmit(mean_x, mean_p, rng) -> (x, p)``.
    """
    channel = channel if channel is not None else cfg.ch
    n_blocks = -(-cfg.n_rounds // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, cfg.n_rounds - b * BLOCK_SIZE) for b in range(n_blocks)]

    def work(b):
        # full blocks always, so a round's values never depend on n_rounds
        full = _simulate_block(cfg.scheme, b, BLOCK_SIZE, cfg.mod, channel, cfg.seed)
        return full if sizes[b] == BLOCK_SIZE else full.subset(slice(0, sizes[b]))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(n_blocks)))
    else:
        parts = [work(b) for b in range(n_blocks)]
    return Records.concatenate(parts)


def empirical_ber(records: Records) -> float:
    if len(records) == 0:
        raise InsufficientDataError("empirical_ber needs at least one record")
    return float(np.mean(records.alice_bit != records.bob_bit))


def summarize(records: Records) -> RunSummary:
    n = len(records)
    moments = {
        "mean_x_a": float(np.mean(records.x_a)),
        "mean_p_a": float(np.mean(records.p_a)),
        "var_x_a": float(np.var(records.x_a)),
        "var_p_a": float(np.var(records.p_a)),
        "cov_x_a_p_a": float(np.mean((records.x_a - records.x_a.mean()) * (records.p_a - records.p_a.mean()))),
    }
    for b, name in ((0, "x"), (1, "p")):
        sel = records.bob_basis == b
        bob = records.bob_value[sel]
        xa, pa = records.x_a[sel], records.p_a[sel]
        moments[f"n_{name}"] = int(sel.sum())
        if bob.size == 0:
            continue
        moments[f"mean_{name}_b"] = float(np.mean(bob))
        moments[f"var_{name}_b"] = float(np.var(bob))
        moments[f"e_x_a_{name}_b"] = float(np.mean(xa * bob))
        moments[f"e_p_a_{name}_b"] = float(np.mean(pa * bob))
    return RunSummary(n, empirical_ber(records), moments)


def run_beamsplitter_scheme(cfg: RunConfig, workers: int = 1):
    cfg = RunConfig(PMScheme.BEAMSPLITTER, cfg.n_rounds, cfg.mod, cfg.ch, cfg.seed)
    records = simulate(cfg, workers)
    return records, summarize(records)


def run_trng_scheme(cfg: RunConfig, workers: int = 1):
    cfg = RunConfig(PMScheme.TRNG, cfg.n_rounds, cfg.mod, cfg.ch, cfg.seed)
    records = simulate(cfg, workers)
    return records, summarize(records)
