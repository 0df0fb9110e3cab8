"""misbelief - Long-run beliefs of dogmatically overconfident Bayesian learners."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("misbelief")
except PackageNotFoundError:  # running from a source checkout without an install
    __version__ = "0.0.0+unknown"

__all__ = ["__version__"]
