"""JSON Schemas for the documents written by the runner."""

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_INT_OR_NULL = {"type": ["integer", "null"]}

VISIBILITY_FIT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["v_pm", "v_pm_se", "v_hv", "v_hv_se", "residual_rms", "exact"],
    "additionalProperties": False,
    "properties": {
        "v_pm": _NUM,
        "v_pm_se": {"type": "number", "minimum": 0},
        "v_hv": _NUM,
        "v_hv_se": {"type": "number", "minimum": 0},
        "residual_rms": {"type": "number", "minimum": 0},
        "exact": {"type": "boolean"},
    },
}

_CELL_KEY = {"enum": ["+1,+1", "-1,+1", "+1,-1", "-1,-1"]}

LGI_REPORT_ENTRY = {
    "type": "object",
    "required": ["lhs", "rhs", "margin", "violated", "negative_cell", "negative_value", "source", "cell_negative"],
    "additionalProperties": False,
    "properties": {
        "lhs": _NUM,
        "rhs": _NUM,
        "margin": _NUM,
        "violated": {"type": "boolean"},
        "negative_cell": {
            "oneOf": [
                {"type": "null"},
                {"type": "array", "items": {"enum": [-1, 1]}, "minItems": 2, "maxItems": 2},
            ]
        },
        "negative_value": _NUM_OR_NULL,
        "source": {"enum": ["FromCorrelations", "FromQuasiDistribution"]},
        "cell_negative": {
            "type": "object",
            "propertyNames": _CELL_KEY,
            "additionalProperties": {"type": "boolean"},
            "minProperties": 4,
        },
    },
}

LGI_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["error_method", "config", "visibility_fit", "points", "summary"],
    "additionalProperties": False,
    "properties": {
        "error_method": {"type": "string"},
        "config": {"type": "object"},
        "visibility_fit": VISIBILITY_FIT,
        "points": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [
                    "theta_deg", "status", "error", "pexp_margin", "report",
                    "margin_stderr", "replicates_kept", "dropped_replicates",
                ],
                "additionalProperties": False,
                "properties": {
                    "theta_deg": _NUM,
                    "status": {"enum": ["ok", "singular"]},
                    "error": {"type": ["string", "null"]},
                    "pexp_margin": {"type": "number", "minimum": 0},
                    "report": {"oneOf": [{"type": "null"}, LGI_REPORT_ENTRY]},
                    "margin_stderr": _NUM_OR_NULL,
                    "replicates_kept": _INT_OR_NULL,
                    "dropped_replicates": _INT_OR_NULL,
                },
            },
        },
        "summary": {
            "type": "object",
            "required": [
                "min_margin", "min_margin_theta_deg", "violated_at_all_points",
                "dropped_replicates_total", "singular_theta_deg",
            ],
            "additionalProperties": False,
            "properties": {
                "min_margin": _NUM_OR_NULL,
                "min_margin_theta_deg": _NUM_OR_NULL,
                "violated_at_all_points": {"type": "boolean"},
                "dropped_replicates_total": {"type": "integer", "minimum": 0},
                "singular_theta_deg": {"type": "array", "items": _NUM},
            },
        },
    },
}
