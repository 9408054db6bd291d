"""MCP tools over the distance-analysis layer"""

from . import analysis_tools
from .decorators import get_registered_tools, register_tools_with_fastmcp, tool

__all__ = ["analysis_tools", "get_registered_tools", "register_tools_with_fastmcp", "tool"]
