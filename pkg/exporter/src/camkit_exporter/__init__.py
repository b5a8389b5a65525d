"""camkit-exporter: torch-built fixtures in camkit's neutral file formats.

The package intentionally never imports camkit — the file formats are the
whole contract.  Importing the subpackages that build models requires
torch; this top level stays import-safe without it.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
