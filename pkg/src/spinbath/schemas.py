"""JSON schemas for CLI artifacts."""
import jsonschema

_number = {"type": "number"}
_matrix = {"type": "array", "items": {"type": "array", "items": _number}}

_RESULTS = {
    "corr": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["time", "channel", "splitting", "real", "imag"],
            "properties": {"time": _number, "channel": {"type": "string"},
                           "splitting": _number, "real": _matrix, "imag": _matrix},
        },
    },
    "amps": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["time", "pattern", "n", "amplitude_sq", "independent_product",
                         "enhancement", "matching_count", "violation"],
            "properties": {"pattern": {"type": "array", "items": {"type": "integer"}},
                           "matching_count": {"type": "integer"},
                           "violation": {"type": "boolean"}},
        },
    },
    "threshold": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["n", "P_1", "P_fail_indep", "P_fail_corr", "breakdown"],
        },
    },
    "dfs-check": {
        "type": "array",
        "items": {"type": "object", "required": ["state", "n_qubits", "collective_z_residual"]},
    },
    "oracle": {"type": "array", "items": {"type": "object", "required": ["job", "passed"]}},
    "validate": {
        "type": "array",
        "items": {"type": "object", "required": ["criterion", "name", "passed", "detail"]},
    },
}


def schema_for(kind):
    return {
        "type": "object",
        "required": ["kind", "version", "config", "results"],
        "properties": {
            "kind": {"const": kind},
            "version": {"const": 1},
            "config": {"type": "object", "additionalProperties": {"type": "object"}},
            "results": _RESULTS[kind],
        },
    }


def validate_artifact(doc):
    jsonschema.validate(doc, schema_for(doc.get("kind")))
