"""Live exam service: JSON-over-HTTP sessions running the adaptive exam."""

from .app import create_app
from .sessions import LiveSession, SessionRegistry
from .store import SessionStore

__all__ = ["create_app", "LiveSession", "SessionRegistry", "SessionStore"]
