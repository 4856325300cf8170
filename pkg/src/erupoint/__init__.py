try:
    from erupoint._version import version as __version__
except ImportError:
    __version__ = "unknown"

from erupoint.config import Config

__all__ = ("Config", "__version__")
