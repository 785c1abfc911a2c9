"""Numerical laboratory for resonant ill-posedness of fifth-order KP-I on an irrational torus."""

from importlib.metadata import PackageNotFoundError, version

try:
    from ._version import __version__
except (ImportError, ModuleNotFoundError):
    try:
        __version__ = version("kp5lab")
    except PackageNotFoundError:
        __version__ = "0.0.0"

__all__ = ["__version__"]
