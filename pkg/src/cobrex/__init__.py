"""cobrex: find candidate API endpoints in COBOL programs and compute their
request/response signatures with liveness and reaching-definitions analyses."""

__version__ = "0.1.0"

from . import errors, frontend, graphs, oracle, signature

__all__ = ["errors", "frontend", "graphs", "oracle", "signature", "__version__"]
