"""
Logging and output-path utilities
"""

from .logging import get_logger, setup_logging
from .validation import ensure_output_dir, get_output_root, set_output_root, validate_path

__all__ = [
    "ensure_output_dir",
    "get_logger",
    "get_output_root",
    "set_output_root",
    "setup_logging",
    "validate_path",
]
