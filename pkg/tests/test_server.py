"""
Tests for the FastMCP tool server
"""

import logging
from unittest.mock import MagicMock, patch

import pytest

from overlap_lab.server import auto_discover_tools, create_server, run_stdio_server


def test_auto_discover_tools():
    """Modules without a package path, or with an empty one, are ignored"""

    class MockModuleNoPath:
        __name__ = "test_module"

    class MockModuleWithPath:
        __name__ = "test_module_with_path"
        __path__ = []

    auto_discover_tools(MockModuleNoPath())
    auto_discover_tools(MockModuleWithPath())


def test_auto_discover_logs_import_errors(tmp_path, caplog):
    caplog.set_level(logging.WARNING, logger="overlap_lab.server")
    package = tmp_path / "broken_tools"
    package.mkdir()
    (package / "__init__.py").write_text("")
    (package / "bad.py").write_text("import overlap_lab_missing_dependency\n")

    class BrokenPackage:
        __name__ = "broken_tools"
        __path__ = [str(package)]

    auto_discover_tools(BrokenPackage())
    assert "Could not import tool module 'broken_tools.bad'" in caplog.text


def test_create_server():
    with (
        patch("overlap_lab.server.FastMCP") as mock_fastmcp_class,
        patch("overlap_lab.tools.decorators.register_tools_with_fastmcp") as mock_register,
        patch("overlap_lab.server.auto_discover_tools"),
    ):
        mock_server = MagicMock()
        mock_fastmcp_class.return_value = mock_server

        server = create_server(server_name="test", log_level="INFO")

        mock_fastmcp_class.assert_called_once_with("test")
        mock_register.assert_called_once_with(mock_server)
        assert server == mock_server


def test_server_name_from_environment(monkeypatch):
    monkeypatch.setenv("OVERLAP_LAB_SERVER_NAME", "env-test-server")
    with (
        patch("overlap_lab.server.FastMCP") as mock_fastmcp_class,
        patch("overlap_lab.tools.decorators.register_tools_with_fastmcp"),
    ):
        create_server()
        mock_fastmcp_class.assert_called_once_with("env-test-server")


def test_server_name_default(monkeypatch):
    monkeypatch.delenv("OVERLAP_LAB_SERVER_NAME", raising=False)
    with (
        patch("overlap_lab.server.FastMCP") as mock_fastmcp_class,
        patch("overlap_lab.tools.decorators.register_tools_with_fastmcp"),
    ):
        create_server()
        mock_fastmcp_class.assert_called_once_with("overlap-lab")


def test_run_stdio_server_basic():
    with patch("overlap_lab.server.create_server") as mock_create:
        mock_server = MagicMock()
        mock_create.return_value = mock_server

        run_stdio_server(server_name="test", log_level="INFO")

        mock_create.assert_called_once_with(None, "test", "INFO")
        mock_server.run.assert_called_once_with(transport="stdio")


def test_run_stdio_server_with_tool_modules():
    class MockToolModule:
        __name__ = "mock_tools"
        __path__ = ["/mock/path"]

    mock_module = MockToolModule()
    with patch("overlap_lab.server.create_server") as mock_create:
        mock_create.return_value = MagicMock()
        run_stdio_server(tool_modules=[mock_module])
        mock_create.assert_called_once_with([mock_module], None, "INFO")


@pytest.mark.asyncio
async def test_real_server_lists_analysis_tools():
    """The default server exposes every analysis tool"""
    server = create_server(server_name="integration")
    names = {t.name for t in await server.list_tools()}
    assert {"dataset_summary", "factor_importance_table", "check_constant_overlap", "traversal_distances"} <= names
