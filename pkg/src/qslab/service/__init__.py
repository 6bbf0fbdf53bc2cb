"""HTTP service exposing the experiment harness."""
from .app import app

__all__ = ["app"]
