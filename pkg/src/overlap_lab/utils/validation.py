"""
Output-root handling

Every artifact is written below a single output root, taken from
``OVERLAP_LAB_OUTPUT_ROOT`` (default ``./runs``). Paths that resolve outside
it are rejected.
"""

import logging
import os
import pathlib

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_ROOT = "runs"

_output_root: str | None = None


def get_output_root() -> str:
    """The active output root as an absolute path"""
    root = _output_root or os.getenv("OVERLAP_LAB_OUTPUT_ROOT") or DEFAULT_OUTPUT_ROOT
    return str(pathlib.Path(root).resolve())


def set_output_root(root: str | None) -> bool:
    """
    Override the output root; ``None`` restores the environment default.

    Returns:
        False if the path exists but is not a directory
    """
    global _output_root

    if root is None:
        _output_root = None
        return True
    path = pathlib.Path(root).resolve()
    if path.exists() and not path.is_dir():
        logger.error(f"Output root is not a directory: {path}")
        return False
    _output_root = str(path)
    logger.debug(f"Output root set to: {_output_root}")
    return True


def validate_path(path: str, root: str | None = None) -> pathlib.Path | None:
    """
    Resolve a path inside the output root.

    Args:
        path: Relative paths are taken relative to the root
        root: Optional root overriding the active one

    Returns:
        Resolved Path, or None if the path is empty or escapes the root
    """
    if not path:
        logger.warning("Empty path provided")
        return None

    root_path = pathlib.Path(root or get_output_root()).resolve()
    try:
        candidate = pathlib.Path(path)
        if not candidate.is_absolute():
            candidate = root_path / candidate
        resolved = candidate.resolve()
        try:
            resolved.relative_to(root_path)
        except ValueError:
            logger.warning(f"Path '{path}' is outside output root '{root_path}'")
            return None
        return resolved
    except (OSError, RuntimeError) as e:
        logger.warning(f"Invalid path '{path}': {e}")
        return None


def ensure_output_dir(path: str) -> pathlib.Path | None:
    """validate_path, then create the directory"""
    resolved = validate_path(path)
    if resolved is None:
        return None
    resolved.mkdir(parents=True, exist_ok=True)
    return resolved
