"""softsense: a soft-sensing toolkit built around multi-headed
quality-driven autoencoders for high-dimensional, highly imbalanced
multi-outcome classification.
"""

from .backend import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
