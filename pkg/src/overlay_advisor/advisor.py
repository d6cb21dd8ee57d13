"""Sweep candidate overlay sizes, predict their resources and pick the largest
configuration that fits the device.

Tree ensembles cannot predict outside the range of targets they were trained
on, so candidates beyond the training feature range are flagged with an
extrapolation warning rather than silently trusted.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .capacity import DeviceProfile, Verdict, gate
from .dataset import FEATURES, TARGETS, Record
from .errors import ParseError, ValidationError
from .forest import ForestConfig, RandomForest, train_forest
from .overlay import BUS_WIDTH_CEILING, MAX_COUNT, OverlayConfig, ResourceEstimate

BUNDLE_FORMAT_VERSION = 1
GATED_TARGETS = ("luts", "ffs", "mem_bits")


@dataclass
class ModelBundle:
    forests: dict[str, RandomForest]
    feature_names: list[str]
    training_range: dict[str, tuple[float, float]]
    manifest: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for target, forest in self.forests.items():
            if forest.feature_names != self.feature_names:
                raise ValidationError(f"forest {target!r} has mismatched feature names")
        for name in self.feature_names:
            lo, hi = self.training_range[name]
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValidationError(f"training range of {name!r} is not finite")

    @property
    def targets(self) -> list[str]:
        return [t for t in TARGETS if t in self.forests]

    def predict(self, features: Sequence[float]) -> dict[str, float]:
        return {t: self.forests[t].predict(features) for t in self.targets}

    def outside_range(self, features: Sequence[float]) -> list[str]:
        out = []
        for name, v in zip(self.feature_names, features):
            lo, hi = self.training_range[name]
            if not lo <= v <= hi:
                out.append(name)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": BUNDLE_FORMAT_VERSION,
            "manifest": self.manifest,
            "feature_names": self.feature_names,
            "training_range": {k: list(v) for k, v in self.training_range.items()},
            "forests": {t: self.forests[t].to_dict() for t in self.targets},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":")) + "\n"

    @classmethod
    def loads(cls, text: str) -> ModelBundle:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"model is not valid JSON: {exc}") from None
        if doc.get("format_version") != BUNDLE_FORMAT_VERSION:
            raise ParseError(f"unsupported model format_version {doc.get('format_version')!r}")
        try:
            return cls(
                forests={t: RandomForest.from_dict(f) for t, f in doc["forests"].items()},
                feature_names=list(doc["feature_names"]),
                training_range={k: (float(v[0]), float(v[1])) for k, v in doc["training_range"].items()},
                manifest=doc.get("manifest", {}),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ParseError(f"malformed model document: {exc}") from None


def train_bundle(
    records: Sequence[Record],
    targets: Sequence[str] = TARGETS,
    cfg: ForestConfig = ForestConfig(),
    manifest: dict[str, Any] | None = None,
    n_jobs: int = 1,
) -> ModelBundle:
    if not records:
        raise ValidationError("cannot train on an empty dataset")
    unknown = [t for t in targets if t not in TARGETS]
    if unknown:
        raise ValidationError(
            f"unknown target(s) {', '.join(unknown)}; valid targets: {', '.join(TARGETS)}"
        )
    X = np.array([r.features() for r in records])
    forests = {}
    for t in TARGETS:
        if t in targets:
            y = np.array([r.target(t) for r in records], dtype=float)
            forests[t] = train_forest(X, y, cfg, FEATURES, t, n_jobs=n_jobs)
    training_range = {
        name: (float(X[:, j].min()), float(X[:, j].max())) for j, name in enumerate(FEATURES)
    }
    return ModelBundle(forests, list(FEATURES), training_range, manifest or {})


@dataclass(frozen=True)
class Candidate:
    config: OverlayConfig
    predicted: ResourceEstimate
    verdict: Verdict
    extrapolation_warning: bool
    raw: dict[str, float] = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Recommendation:
    entries: tuple[Candidate, ...]
    best: int | None

    @property
    def best_entry(self) -> Candidate | None:
        return None if self.best is None else self.entries[self.best]


def sweep_candidates(
    start: int,
    doublings: int,
    fanout_limit: int = 16,
    bus_width: int = BUS_WIDTH_CEILING,
) -> list[OverlayConfig]:
    """Array sizes ``start * 2**i`` for ``i = 0 .. doublings``."""
    if start < 1:
        raise ValidationError("start must be >= 1")
    if doublings < 0:
        raise ValidationError("doublings must be >= 0")
    if start << doublings >= MAX_COUNT:
        raise ValidationError(f"sweep overflows: {start} * 2**{doublings} exceeds 2**63")
    return [OverlayConfig(start << i, fanout_limit, bus_width) for i in range(doublings + 1)]


def estimate_from_prediction(cfg: OverlayConfig, predicted: dict[str, float]) -> ResourceEstimate:
    """Round predictions up to whole resources; fan-out falls back to the
    configured limit when the bundle has no fan-out model."""

    def up(v: float) -> int:
        return max(0, math.ceil(v))

    wires = cfg.num_ste * cfg.fanout_limit
    fanout = up(predicted["max_fanout"]) if "max_fanout" in predicted else cfg.fanout_limit
    return ResourceEstimate(
        luts=up(predicted["luts"]),
        ffs=up(predicted["ffs"]),
        mem_bits=up(predicted["mem_bits"]),
        wires=wires,
        fanout=fanout,
        bus_overflow=wires > cfg.bus_width,
    )


def evaluate_candidate(
    cfg: OverlayConfig, bundle: ModelBundle, profile: DeviceProfile, ceiling_percent: float = 100.0
) -> Candidate:
    features = cfg.features()
    predicted = bundle.predict(features)
    est = estimate_from_prediction(cfg, predicted)
    return Candidate(
        config=cfg,
        predicted=est,
        verdict=gate(est, profile, ceiling_percent),
        extrapolation_warning=bool(bundle.outside_range(features)),
        raw=predicted,
    )


def recommend(
    candidates: Sequence[OverlayConfig],
    bundle: ModelBundle,
    profile: DeviceProfile,
    ceiling_percent: float = 100.0,
) -> Recommendation:
    if not candidates:
        raise ValidationError("no candidate configurations given")
    if bundle.feature_names != list(FEATURES):
        raise ValidationError(
            f"model features {bundle.feature_names} do not match overlay features {list(FEATURES)}"
        )
    missing = [t for t in GATED_TARGETS if t not in bundle.forests]
    if missing:
        raise ValidationError(f"model lacks forests for gated target(s): {', '.join(missing)}")

    ordered = sorted(candidates, key=lambda c: (c.num_ste, c.fanout_limit, c.bus_width))
    entries = tuple(evaluate_candidate(c, bundle, profile, ceiling_percent) for c in ordered)
    best = None
    for i, e in enumerate(entries):
        if not e.verdict.fits:
            continue
        if best is None:
            best = i
            continue
        b = entries[best].config
        # largest array wins; equal sizes prefer the smaller fan-out budget
        if e.config.num_ste > b.num_ste or (
            e.config.num_ste == b.num_ste and e.config.fanout_limit < b.fanout_limit
        ):
            best = i
    return Recommendation(entries, best)
