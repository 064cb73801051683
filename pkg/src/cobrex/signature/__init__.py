from .analyses import (
    DEFAULT_PATH_BUDGET,
    DEFAULT_UNROLL,
    classify_http_method,
    enumerate_feasible_paths,
    flow_insensitive_signature,
    flow_sensitive_signature,
    path_sensitive_signature,
)
from .interproc import (
    SummaryTable,
    argument_closure,
    interprocedural_signature,
    translate_fields,
)
from .kernels import HAS_NUMBA, active_backend
from .liveness import LivenessState, solve_region_liveness
from .model import (
    ApiSignature,
    FieldRole,
    UseDefSets,
    Variant,
    build_use_def_sets,
    make_signature,
    signature_to_json,
)
from .surety import surety_annotate

__all__ = [
    "DEFAULT_PATH_BUDGET",
    "DEFAULT_UNROLL",
    "classify_http_method",
    "enumerate_feasible_paths",
    "flow_insensitive_signature",
    "flow_sensitive_signature",
    "path_sensitive_signature",
    "SummaryTable",
    "argument_closure",
    "interprocedural_signature",
    "translate_fields",
    "HAS_NUMBA",
    "active_backend",
    "LivenessState",
    "solve_region_liveness",
    "ApiSignature",
    "FieldRole",
    "UseDefSets",
    "Variant",
    "build_use_def_sets",
    "make_signature",
    "signature_to_json",
    "surety_annotate",
]
