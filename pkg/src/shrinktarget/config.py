"""Experiment configuration files (JSON) and the objects they describe."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from .arcs import ArcSet, frac, point
from .maps import (CircleMap, Rotation, golden_quotients, liouville_quotients, map_from_json,
                   rotation_for_horizon)
from .random_covering import LengthFamily
from .rates import HorizonError, RateSeq
from .schemas import CONFIG_SCHEMA
from .targets import AbstractSets, GeometricBalls, SelfBalls, TargetSeq

DEFAULT_PRECISION = {"dps": 40, "floor_bits": 64, "center_bits": 64}


class ConfigError(ValueError):
    pass


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


@dataclass
class ExperimentConfig:
    data: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {path}: {exc.message}") from None
        return cls(json.loads(json.dumps(data)))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_json(data)

    def to_json(self) -> dict:
        return json.loads(json.dumps(self.data))

    def dumps(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.data).encode()).hexdigest()

    # --- typed accessors -----------------------------------------------------

    def get(self, key, default=None):
        return self.data.get(key, default)

    def require(self, key):
        if key not in self.data:
            raise ConfigError(f"config is missing required key {key!r}")
        return self.data[key]

    @property
    def horizon(self) -> int:
        return int(self.require("N"))

    @property
    def seed(self):
        return self.data.get("seed")

    @property
    def precision(self) -> dict:
        return {**DEFAULT_PRECISION, **self.data.get("precision", {})}

    def point(self, key: str) -> Fraction:
        try:
            return point(frac(self.require(key)))
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{key}: {exc}") from None

    def circle_map(self, horizon: int | None = None) -> CircleMap:
        spec = self.require("map")
        horizon = self.horizon if horizon is None else horizon
        try:
            return build_map(spec, horizon)
        except HorizonError:
            raise
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"map: {exc}") from None

    def rates(self, key: str = "rates") -> RateSeq:
        try:
            return RateSeq.from_json(self.require(key))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{key}: {exc}") from None

    def lengths(self) -> LengthFamily:
        try:
            return LengthFamily.from_json(self.require("lengths"))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"lengths: {exc}") from None

    def targets(self) -> TargetSeq:
        spec = self.require("targets")
        try:
            return build_targets(spec)
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"targets: {exc}") from None

    def sample(self) -> list:
        spec = self.data.get("sample")
        if spec is None:
            return [self.point("x")]
        return sample_points(spec)

    def arcset_list(self, key: str) -> list:
        try:
            return [ArcSet.from_json(s) for s in self.require(key)]
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{key}: {exc}") from None


def build_map(spec: dict, horizon: int) -> CircleMap:
    """Map from its tagged JSON; rotations are checked (or deepened) so that q >= N^2."""
    if isinstance(spec, dict) and "rotation" in spec:
        body = spec["rotation"] or {}
        family = body.get("family")
        if "quotients" not in body and "depth" not in body and family in ("golden", "liouville"):
            source = golden_quotients if family == "golden" else liouville_quotients
            return Rotation(rotation_for_horizon(source, horizon, min_depth=2))
        tau = map_from_json(spec)
        if tau.angle.q < horizon * horizon:
            raise HorizonError(
                f"rotation convergent has q = {tau.angle.q} < N^2 = {horizon * horizon}; "
                "use a deeper quotient list")
        return tau
    return map_from_json(spec)


def build_targets(spec: dict) -> TargetSeq:
    kind = spec["type"]
    if kind == "ball":
        return GeometricBalls(point(frac(spec["center"])), RateSeq.from_json(spec["radii"]))
    if kind == "self":
        return SelfBalls(RateSeq.from_json(spec["radii"]))
    if kind == "table":
        return AbstractSets([ArcSet.from_json(s) for s in spec["sets"]],
                            shrinking=bool(spec.get("shrinking", False)))
    if kind == "initial":
        rates = RateSeq.from_json(spec["rates"])
        return AbstractSets.initial_intervals(rates, int(spec["length"]))
    raise ValueError(f"unknown target type {kind!r}")


def sample_points(spec: dict) -> list:
    """A grid k/n, or ``count`` seeded points k / 2^bits."""
    if "grid" in spec:
        n = int(spec["grid"])
        return [Fraction(k, n) for k in range(n)]
    bits = int(spec.get("bits", 64))
    count = int(spec["count"])
    rng = np.random.Generator(np.random.PCG64(int(spec["seed"])))
    words = -(-bits // 64)
    raw = rng.bit_generator.random_raw(count * words).reshape(count, words)
    out = []
    for row in raw.tolist():
        k = 0
        for w in row:
            k = (k << 64) | int(w)
        out.append(Fraction(k >> (64 * words - bits), 2 ** bits))
    return out
