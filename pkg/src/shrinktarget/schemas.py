"""JSON schemas for experiment configs and for every JSON output of the runner."""

RATIONAL = {"type": "string", "pattern": r"^-?[0-9]+/[0-9]+$"}
RATIONAL_IN = {"oneOf": [{"type": "string", "pattern": r"^-?[0-9]+(/[0-9]+)?$"}, {"type": "integer"}]}

ARC = {
    "type": "object",
    "required": ["start", "length"],
    "properties": {"start": RATIONAL_IN, "length": RATIONAL_IN},
    "additionalProperties": False,
}
ARCSET = {"type": "array", "items": ARC}

RATES = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": ["c/n", "c/(n log n)", "c/n^a", "log n/n", "table", "dyadic"]},
        "c": RATIONAL_IN,
        "alpha": RATIONAL_IN,
        "table": {"type": "array", "items": RATIONAL_IN},
        "inner": {"type": "object"},
    },
    "additionalProperties": False,
}

MAP = {
    "type": "object",
    "minProperties": 1,
    "maxProperties": 1,
    "properties": {
        "rotation": {
            "type": "object",
            "properties": {
                "quotients": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "family": {"enum": ["golden", "liouville"]},
                "depth": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "doubling": {"type": "object"},
        "odometer": {"type": "object"},
        "iet": {
            "type": "object",
            "required": ["lengths", "perm"],
            "properties": {"lengths": {"type": "array", "items": RATIONAL_IN},
                           "perm": {"type": "array", "items": {"type": "integer"}}},
        },
    },
    "additionalProperties": False,
}

TARGETS = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["ball", "self", "table", "initial"]},
        "center": RATIONAL_IN,
        "radii": RATES,
        "rates": RATES,
        "sets": {"type": "array", "items": ARCSET},
        "shrinking": {"type": "boolean"},
        "length": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

LENGTHS = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": ["c/n", "log n/n", "table"]},
        "c": RATIONAL_IN,
        "table": {"type": "array", "items": RATIONAL_IN},
    },
    "additionalProperties": False,
}

SAMPLE = {
    "type": "object",
    "oneOf": [
        {"required": ["grid"]},
        {"required": ["seed", "count"]},
    ],
    "properties": {
        "grid": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "count": {"type": "integer", "minimum": 1},
        "bits": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "experiment config",
    "type": "object",
    "properties": {
        "map": MAP,
        "x": RATIONAL_IN,
        "y": RATIONAL_IN,
        "N": {"type": "integer", "minimum": 1},
        "N0": {"type": "integer", "minimum": 1},
        "M": {"type": "integer", "minimum": 1},
        "n_min": {"type": "integer", "minimum": 1},
        "targets": TARGETS,
        "rates": RATES,
        "radii": RATES,
        "lengths": LENGTHS,
        "sample": SAMPLE,
        "seed": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "blocks": {"type": "integer", "minimum": 1},
        "max_index": {"type": "integer", "minimum": 1},
        "c": RATIONAL_IN,
        "n": {"type": "integer", "minimum": 1},
        "delta": RATIONAL_IN,
        "epsilon": RATIONAL_IN,
        "threshold": RATIONAL_IN,
        "seeds": {"type": "array", "items": ARCSET},
        "sources": {"type": "array", "items": ARCSET},
        "target_sets": {"type": "array", "items": ARCSET},
        "precision": {
            "type": "object",
            "properties": {"dps": {"type": "integer", "minimum": 30},
                           "floor_bits": {"const": 64},
                           "center_bits": {"const": 64}},
            "additionalProperties": False,
        },
        "output": {"type": "string"},
    },
    "additionalProperties": False,
}

META = {
    "type": "object",
    "required": ["command", "config_hash", "seed", "precision", "version", "timestamp"],
    "properties": {
        "command": {"type": "string"},
        "config_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "seed": {"type": ["integer", "null"]},
        "precision": {"type": "object"},
        "version": {"type": "string"},
        "timestamp": {"type": "string"},
    },
}


def _with_meta(payload_key: str, payload: dict) -> dict:
    return {
        "type": "object",
        "required": ["meta", payload_key],
        "properties": {"meta": META, payload_key: payload},
    }


HIT_RECORD = {
    "type": "object",
    "required": ["horizon", "count", "first_hit", "times"],
    "properties": {
        "horizon": {"type": "integer"},
        "count": {"type": "integer", "minimum": 0},
        "first_hit": {"type": ["integer", "null"]},
        "times": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "x": RATIONAL,
    },
}

CERT_BASE = {"type": "object", "required": ["kind", "passes"],
             "properties": {"kind": {"type": "string"}, "passes": {"type": "boolean"}}}

OUTPUT_SCHEMAS = {
    "hits": _with_meta("result", {"type": "object", "required": ["records"],
                                  "properties": {"records": {"type": "array", "items": HIT_RECORD}}}),
    "tail-union": _with_meta("result", {
        "type": "object",
        "required": ["N", "M", "measure", "threshold_passed"],
        "properties": {"N": {"type": "integer"}, "M": {"type": "integer"},
                       "measure": RATIONAL, "threshold": RATIONAL,
                       "threshold_passed": {"type": ["boolean", "null"]}, "set": ARCSET},
    }),
    "construct-invisible": _with_meta("certificate", CERT_BASE),
    "construct-visible": _with_meta("certificate", CERT_BASE),
    "construct-sweep": _with_meta("certificate", CERT_BASE),
    "rearrange": _with_meta("result", {
        "type": "object",
        "required": ["rearrangement", "checks"],
        "properties": {
            "rearrangement": {"type": "array", "items": {
                "type": "object", "required": ["start", "length", "offset"],
                "properties": {"start": RATIONAL, "length": RATIONAL, "offset": RATIONAL}}},
            "checks": {"type": "array"},
        },
    }),
    "shepp": _with_meta("result", {
        "type": "object",
        "required": ["trials", "covered_count", "estimate", "wilson_95_interval", "seed", "classification"],
        "properties": {
            "trials": {"type": "integer", "minimum": 1},
            "covered_count": {"type": "integer", "minimum": 0},
            "estimate": RATIONAL,
            "wilson_95_interval": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            "seed": {"type": "integer"},
            "classification": {"enum": ["diverges", "converges", "unknown"]},
        },
    }),
    "cover-profile-report": _with_meta("result", {
        "type": "object",
        "required": ["n_min", "N", "sup_scaled", "argmax", "periodic", "checkpoints"],
    }),
    "verify": _with_meta("result", {
        "type": "object",
        "required": ["kind", "ok", "first_failure", "failures"],
        "properties": {"kind": {"type": "string"}, "ok": {"type": "boolean"},
                       "first_failure": {"type": ["string", "null"]},
                       "failures": {"type": "array", "items": {"type": "string"}}},
    }),
}
