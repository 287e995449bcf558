"""HTTP service wrapping the core toolkit."""

from .app import create_app

__all__ = ["create_app"]
