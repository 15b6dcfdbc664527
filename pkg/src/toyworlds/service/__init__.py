"""Service layer: FastAPI app, session manager, wire gateway."""

from .app import create_app

__all__ = ["create_app"]
