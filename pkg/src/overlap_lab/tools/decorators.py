"""
Tool registration for the overlap-lab MCP server

Tools are collected at import time and registered once a FastMCP instance
exists. Package errors raised inside a tool come back to the client as an
``{"error": ..., "error_type": ...}`` result instead of a protocol error.
"""

import functools
import inspect
import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any, TypeVar

from ..errors import OverlapLabError

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

# bad arguments surface as ValueError from pydantic and numpy as well
TOOL_ERRORS: tuple[type[Exception], ...] = (OverlapLabError, ValueError)


@dataclass(frozen=True)
class RegisteredTool:
    func: Callable[..., Any]
    name: str
    description: str
    examples: list[dict[str, Any]] = field(default_factory=list)

    @property
    def is_async(self) -> bool:
        return inspect.iscoroutinefunction(self.func)


_tool_registry: dict[str, RegisteredTool] = {}


def error_result(name: str, error: Exception) -> dict[str, Any]:
    logger.error(f"{name} failed: {error}")
    return {"error": str(error), "error_type": type(error).__name__}


def _with_error_results(func: F, name: str) -> F:
    if inspect.iscoroutinefunction(func):

        @functools.wraps(func)
        async def async_wrapper(*args: Any, **kwargs: Any) -> Any:
            try:
                return await func(*args, **kwargs)
            except TOOL_ERRORS as e:
                return error_result(name, e)

        return async_wrapper  # type: ignore[return-value]

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except TOOL_ERRORS as e:
            return error_result(name, e)

    return wrapper  # type: ignore[return-value]


def tool(
    name: str | None = None,
    description: str | None = None,
    examples: list[dict[str, Any]] | None = None,
) -> Callable[[F], F]:
    """
    Mark a function as an MCP tool.

    The returned function has the same signature; it returns an error
    result where the original raised ``OverlapLabError`` or ``ValueError``.

    Example:
        @tool(description="Factor sizes of a dataset")
        def factor_sizes(dataset: str = "xysquares") -> list[int]:
            ...
    """

    def decorator(func: F) -> F:
        tool_name = name or func.__name__
        wrapped = _with_error_results(func, tool_name)
        if tool_name in _tool_registry:
            logger.warning(f"Tool '{tool_name}' registered twice; keeping the latest")
        _tool_registry[tool_name] = RegisteredTool(
            func=wrapped,
            name=tool_name,
            description=description or inspect.getdoc(func) or "",
            examples=list(examples or []),
        )
        wrapped._overlap_lab_tool = _tool_registry[tool_name]  # type: ignore[attr-defined]
        logger.debug(f"Tool collected: {tool_name} ({'async' if inspect.iscoroutinefunction(func) else 'sync'})")
        return wrapped

    return decorator


def register_tools_with_fastmcp(mcp_instance: Any) -> None:
    """Register every collected tool with a FastMCP instance"""
    for registered in _tool_registry.values():
        mcp_instance.tool(name=registered.name, description=registered.description)(registered.func)
        logger.debug(f"Registered tool {registered.name} with FastMCP")


def get_registered_tools() -> list[RegisteredTool]:
    return list(_tool_registry.values())


__all__ = [
    "RegisteredTool",
    "error_result",
    "get_registered_tools",
    "register_tools_with_fastmcp",
    "tool",
]
