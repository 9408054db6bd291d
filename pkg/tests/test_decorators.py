"""
Tests for the tool decorator and FastMCP registration
"""

import asyncio
import inspect
from unittest.mock import MagicMock

import pytest

from overlap_lab.errors import InvalidParamsError, TrainingDivergedError
from overlap_lab.tools.decorators import RegisteredTool, get_registered_tools, register_tools_with_fastmcp, tool


def _registered(name: str) -> RegisteredTool:
    return next(t for t in get_registered_tools() if t.name == name)


def test_basic_tool_decorator():
    """The tool is registered and still callable with its own signature"""

    @tool(description="Test tool")
    def test_func(x: int, y: str = "default") -> str:
        """Test function"""
        return f"{x}: {y}"

    registered = test_func._overlap_lab_tool
    assert registered.name == "test_func"
    assert registered.description == "Test tool"
    assert registered.func is test_func
    assert test_func(1) == "1: default"
    assert list(inspect.signature(test_func).parameters) == ["x", "y"]


def test_tool_decorator_with_custom_name():
    @tool(name="custom_name", description="Custom tool")
    def original_name(value: str) -> str:
        return value.upper()

    assert _registered("custom_name").func is original_name
    assert original_name.__name__ == "original_name"


def test_tool_decorator_uses_docstring():
    @tool()
    def documented_func() -> str:
        """This is from the docstring"""
        return "test"

    assert _registered("documented_func").description == "This is from the docstring"


def test_tool_decorator_with_examples():
    examples = [{"input": {"dataset": "dots"}, "output": {"total": 64}}]

    @tool(examples=examples)
    def example_func(dataset: str) -> dict:
        return {"total": 64}

    assert _registered("example_func").examples == examples


def test_duplicate_name_keeps_latest():
    @tool(name="duplicate_tool")
    def first() -> int:
        return 1

    @tool(name="duplicate_tool")
    def second() -> int:
        return 2

    matches = [t for t in get_registered_tools() if t.name == "duplicate_tool"]
    assert len(matches) == 1
    assert matches[0].func is second


def test_package_errors_become_results():
    @tool(name="failing_tool")
    def failing(beta: float) -> dict:
        raise InvalidParamsError(f"beta must be > 0, got {beta}")

    assert failing(-1.0) == {"error": "beta must be > 0, got -1.0", "error_type": "InvalidParamsError"}


def test_value_errors_become_results():
    @tool(name="bad_argument_tool")
    def bad_argument() -> dict:
        raise ValueError("not a number")

    assert bad_argument()["error_type"] == "ValueError"


def test_other_errors_propagate():
    @tool(name="broken_tool")
    def broken() -> dict:
        raise RuntimeError("bug")

    with pytest.raises(RuntimeError):
        broken()


def test_tool_decorator_preserves_async():
    @tool()
    async def async_func(value: str) -> str:
        await asyncio.sleep(0.001)
        return value.upper()

    assert inspect.iscoroutinefunction(async_func)
    assert _registered("async_func").is_async
    assert asyncio.run(async_func("test")) == "TEST"


def test_async_errors_become_results():
    @tool(name="async_failing_tool")
    async def async_failing() -> dict:
        raise TrainingDivergedError("nan loss", step=4)

    result = asyncio.run(async_failing())
    assert result["error_type"] == "TrainingDivergedError"
    assert "nan loss" in result["error"]


def test_register_tools_with_fastmcp():
    @tool(name="registered_tool", description="Registered")
    def registered() -> str:
        return "ok"

    mcp = MagicMock()
    register_tools_with_fastmcp(mcp)
    names = [c.kwargs["name"] for c in mcp.tool.call_args_list]
    assert "registered_tool" in names
    assert len(names) == len(get_registered_tools())
    assert len(names) == len(set(names))
