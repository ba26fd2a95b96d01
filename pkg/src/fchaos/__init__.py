"""Exact step-kernel calculus for Wigner and free Poisson chaos.

Submodules are imported lazily so that process-level knobs (BLAS thread
counts, tensor budgets) set by the CLI before first use actually take
effect; importing :mod:`fchaos` alone pulls in nothing heavy.
"""

__version__ = "0.1.0"

_SUBMODULES = {
    "kernels",
    "contractions",
    "chaos",
    "bichaos",
    "oracles",
    "matrix_oracle",
    "freeness",
    "reports",
    "experiments",
    "cli",
}

__all__ = sorted(_SUBMODULES) + ["__version__"]


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return __all__
