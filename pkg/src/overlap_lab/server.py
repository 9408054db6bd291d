"""
MCP tool server exposing the distance-analysis layer over stdio
"""

import logging
import os
import pkgutil
from typing import Any

from mcp.server.fastmcp import FastMCP

from .utils.logging import setup_logging

logger = logging.getLogger(__name__)

DEFAULT_SERVER_NAME = "overlap-lab"


def create_server(
    tool_modules: Any = None, server_name: str | None = None, log_level: str = "INFO"
) -> FastMCP:
    """Create a FastMCP server and register every discovered tool"""
    # stdout belongs to the protocol
    setup_logging(level=log_level, disable_stdio_logging=True)

    name = server_name or os.getenv("OVERLAP_LAB_SERVER_NAME", DEFAULT_SERVER_NAME)
    mcp = FastMCP(name)

    if tool_modules:
        for module in tool_modules:
            auto_discover_tools(module)
    else:
        from . import tools

        auto_discover_tools(tools)

    from .tools.decorators import register_tools_with_fastmcp

    register_tools_with_fastmcp(mcp)
    return mcp


def run_stdio_server(
    tool_modules: Any = None, server_name: str | None = None, log_level: str = "INFO"
) -> None:
    """Run the tool server with stdio transport (blocks until the client disconnects)"""
    mcp = create_server(tool_modules, server_name, log_level)
    mcp.run(transport="stdio")


def auto_discover_tools(module: Any) -> None:
    """Import every submodule of a package so its ``@tool`` functions register"""
    if not hasattr(module, "__path__"):
        return
    for _, name, _ in pkgutil.iter_modules(module.__path__):
        submodule_name = f"{module.__name__}.{name}"
        try:
            __import__(submodule_name)
        except ImportError as e:
            logger.warning(f"Could not import tool module '{submodule_name}': {e}")
