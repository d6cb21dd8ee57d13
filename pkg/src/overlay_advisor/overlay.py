"""Analytic resource model of the NAPOLY+ STE+ array.

The overlay is a replicated tile, so every resource is modelled as a fixed
overhead plus a per-STE+ term; logic and interconnect also grow with the
per-element fan-out budget::

    luts     = base_luts     + num_ste * luts_per_ste + num_ste * fanout_limit * luts_per_fanout
    ffs      = base_ffs      + num_ste * ffs_per_ste
    mem_bits = base_mem_bits + num_ste * mem_bits_per_ste
    wires    = num_ste * fanout_limit * wires_per_fanout

Fractional results are rounded up.  Arithmetic is exact (``Fraction`` over the
decimal form of each coefficient) so the ceiling never flips on float noise.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .automata import Automaton, extract_features
from .dataset import Record
from .errors import (
    InsufficientDataError,
    ParseError,
    ResourceOverflowError,
    ValidationError,
)
from .rng import SplitMix64, derive_seed

BUS_WIDTH_CEILING = 1_000_000
MAX_COUNT = 1 << 63


@dataclass(frozen=True)
class OverlayConfig:
    num_ste: int
    fanout_limit: int = 16
    bus_width: int = BUS_WIDTH_CEILING

    def __post_init__(self) -> None:
        if self.num_ste < 1:
            raise ValidationError(f"num_ste must be >= 1, got {self.num_ste}")
        if self.fanout_limit < 1:
            raise ValidationError(f"fanout_limit must be >= 1, got {self.fanout_limit}")
        if not 1 <= self.bus_width <= BUS_WIDTH_CEILING:
            raise ValidationError(
                f"bus_width must lie in [1, {BUS_WIDTH_CEILING}], got {self.bus_width}"
            )

    def features(self) -> list[float]:
        return [float(self.num_ste), float(self.fanout_limit)]


@dataclass(frozen=True)
class CostCoefficients:
    luts_per_ste: float = 0.0
    ffs_per_ste: float = 0.0
    mem_bits_per_ste: float = 0.0
    luts_per_fanout: float = 0.0
    wires_per_fanout: float = 1.0
    base_luts: float = 0.0
    base_ffs: float = 0.0
    base_mem_bits: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v) or v < 0:
                raise ValidationError(f"coefficient {f.name} must be finite and >= 0, got {v}")

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ResourceEstimate:
    luts: int
    ffs: int
    mem_bits: int
    wires: int
    fanout: int
    # wires exceed the configured bus width: reported uncapped, flagged here
    bus_overflow: bool = False

    def __post_init__(self) -> None:
        for name in ("luts", "ffs", "mem_bits", "wires", "fanout"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")


@dataclass(frozen=True)
class MappingFailure:
    constraint: str
    required: int
    available: int


@dataclass(frozen=True)
class MappingVerdict:
    fits: bool
    failures: tuple[MappingFailure, ...] = ()


def _exact(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def _ceil_count(value: Fraction, name: str) -> int:
    n = math.ceil(value)
    if n >= MAX_COUNT:
        raise ResourceOverflowError(f"{name} count {n} exceeds 2**63")
    return n


def estimate_resources(cfg: OverlayConfig, co: CostCoefficients) -> ResourceEstimate:
    n, f = cfg.num_ste, cfg.fanout_limit
    c = {k: _exact(v) for k, v in co.as_dict().items()}
    luts = c["base_luts"] + n * c["luts_per_ste"] + n * f * c["luts_per_fanout"]
    ffs = c["base_ffs"] + n * c["ffs_per_ste"]
    mem = c["base_mem_bits"] + n * c["mem_bits_per_ste"]
    wires = _ceil_count(n * f * c["wires_per_fanout"], "wires")
    return ResourceEstimate(
        luts=_ceil_count(luts, "luts"),
        ffs=_ceil_count(ffs, "ffs"),
        mem_bits=_ceil_count(mem, "mem_bits"),
        wires=wires,
        fanout=f,
        bus_overflow=wires > cfg.bus_width,
    )


def map_automaton(a: Automaton, cfg: OverlayConfig) -> MappingVerdict:
    """Check states against STE+ count, fan-out against the limit, and edges
    against the wiring budget ``min(num_ste * fanout_limit, bus_width)``."""
    fv = extract_features(a)
    failures = []
    if fv.num_states > cfg.num_ste:
        failures.append(MappingFailure("states", fv.num_states, cfg.num_ste))
    if fv.max_fan_out > cfg.fanout_limit:
        failures.append(MappingFailure("fanout", fv.max_fan_out, cfg.fanout_limit))
    wire_budget = min(cfg.num_ste * cfg.fanout_limit, cfg.bus_width)
    if fv.num_edges > wire_budget:
        failures.append(MappingFailure("edges", fv.num_edges, wire_budget))
    return MappingVerdict(fits=not failures, failures=tuple(failures))


def _perturb(value: int, factor: float, noise_fraction: float) -> int:
    # round to nearest, then clamp so the integer stays inside the noise band
    nf = _exact(noise_fraction)
    lo = math.ceil(value * (1 - nf))
    hi = math.floor(value * (1 + nf))
    r = round(value * factor)
    if lo <= hi:
        r = min(max(r, lo), hi)
    return max(r, 0)


def generate_synthetic_dataset(
    configs: Sequence[OverlayConfig],
    co: CostCoefficients,
    noise_fraction: float,
    seed: int,
    source_tag: str = "synthetic",
) -> list[Record]:
    """One record per config, each resource scaled by an independent factor
    drawn uniformly from ``[1 - noise_fraction, 1 + noise_fraction]``.

    Record ``i`` draws from ``SplitMix64(derive_seed(seed, i))`` so each row is
    reproducible on its own, whatever order the rows are produced in.
    """
    if not configs:
        raise ValidationError("config list is empty")
    if not 0 <= noise_fraction < 1:
        raise ValidationError("noise_fraction must lie in [0, 1)")
    records = []
    for i, cfg in enumerate(configs):
        est = estimate_resources(cfg, co)
        values = [est.luts, est.ffs, est.mem_bits, est.fanout]
        if noise_fraction > 0:
            rng = SplitMix64(derive_seed(seed, i))
            values = [
                _perturb(v, 1 - noise_fraction + 2 * noise_fraction * rng.random(), noise_fraction)
                for v in values
            ]
        records.append(Record(cfg.num_ste, cfg.fanout_limit, *values, source_tag=source_tag))
    return records


def _lstsq(design: np.ndarray, y: np.ndarray) -> np.ndarray:
    # column scaling keeps the normal equations well conditioned when num_ste
    # spans several orders of magnitude
    scale = np.abs(design).max(axis=0)
    scale[scale == 0] = 1.0
    coef, *_ = np.linalg.lstsq(design / scale, y, rcond=None)
    return coef / scale


def _full_rank(design: np.ndarray) -> bool:
    scale = np.abs(design).max(axis=0)
    scale[scale == 0] = 1.0
    return np.linalg.matrix_rank(design / scale) == design.shape[1]


def calibrate_coefficients(
    records: Sequence[Record], base: CostCoefficients | None = None
) -> CostCoefficients:
    """Least-squares fit of the linear cost model to measured records.

    ``wires_per_fanout`` is not observable from records and is copied from
    ``base`` (default 1.0).  If every record shares one ``fanout_limit`` the
    per-fanout logic term cannot be separated from the per-STE+ term; it is
    folded into ``luts_per_ste`` and ``luts_per_fanout`` is set to 0.
    """
    if len(records) < 3:
        raise InsufficientDataError(f"need at least 3 records, got {len(records)}")
    n = np.array([r.num_ste for r in records], dtype=float)
    f = np.array([r.fanout_limit for r in records], dtype=float)
    if len(np.unique(n)) < 2:
        raise InsufficientDataError(
            "rank-deficient design: need at least 2 distinct num_ste values"
        )
    ones = np.ones_like(n)
    simple = np.column_stack([ones, n])

    def fit(design: np.ndarray, attr: str) -> np.ndarray:
        return _lstsq(design, np.array([getattr(r, attr) for r in records], dtype=float))

    luts_design = np.column_stack([ones, n, n * f])
    if _full_rank(luts_design):
        base_luts, luts_per_ste, luts_per_fanout = fit(luts_design, "luts")
    else:
        warnings.warn(
            "fanout_limit does not vary independently of num_ste; "
            "folding the per-fanout logic term into luts_per_ste",
            stacklevel=2,
        )
        base_luts, luts_per_ste = fit(simple, "luts")
        luts_per_fanout = 0.0
    base_ffs, ffs_per_ste = fit(simple, "ffs")
    base_mem, mem_per_ste = fit(simple, "mem_bits")

    fitted = {
        "base_luts": base_luts,
        "luts_per_ste": luts_per_ste,
        "luts_per_fanout": luts_per_fanout,
        "base_ffs": base_ffs,
        "ffs_per_ste": ffs_per_ste,
        "base_mem_bits": base_mem,
        "mem_bits_per_ste": mem_per_ste,
    }
    for name, value in fitted.items():
        if value < 0:
            warnings.warn(f"fitted {name} = {value:.6g} is negative; clamped to 0", stacklevel=2)
            fitted[name] = 0.0
    wires = base.wires_per_fanout if base is not None else 1.0
    return CostCoefficients(wires_per_fanout=wires, **{k: float(v) for k, v in fitted.items()})


def parse_key_values(text: str) -> dict[str, str]:
    """Flat ``key = value`` text (``key value`` and ``key: value`` also accepted)."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = (p.strip() for p in line.split(sep, 1))
                break
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ParseError(f"expected 'key = value', got {line!r}", lineno)
            key, value = parts[0], parts[1].strip()
        if not key or not value:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", lineno)
        out[key] = value
    return out


def parse_coefficients(text: str) -> CostCoefficients:
    kv = parse_key_values(text)
    known = {f.name for f in fields(CostCoefficients)}
    unknown = sorted(set(kv) - known)
    if unknown:
        raise ParseError(f"unknown coefficient(s): {', '.join(unknown)}")
    values = {}
    for k, v in kv.items():
        try:
            values[k] = float(v)
        except ValueError:
            raise ParseError(f"coefficient {k}: not a decimal number: {v!r}") from None
    return CostCoefficients(**values)


def format_coefficients(co: CostCoefficients) -> str:
    return "".join(f"{k} = {v!r}\n" for k, v in co.as_dict().items())


def load_coefficients(path: str | Path) -> CostCoefficients:
    return parse_coefficients(Path(path).read_text(encoding="utf-8"))


def default_coefficients() -> CostCoefficients:
    text = resources.files("overlay_advisor").joinpath("data/default_coefficients.txt")
    return parse_coefficients(text.read_text(encoding="utf-8"))
