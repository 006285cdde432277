"""Workspaces, DOT rendering and the command-line interface."""

from placidus.frontend.dot import render_dot
from placidus.frontend.workspace import DEMO_DIR, Workspace, WorkspaceError, copy_demo, load_workspace

__all__ = ["DEMO_DIR", "Workspace", "WorkspaceError", "copy_demo", "load_workspace", "render_dot"]
