"""HTTP service binding retrieval, sessions, and SVG adaptation."""

from facetsearch.service.app import create_app
from facetsearch.service.config import ServiceConfig

__all__ = ["create_app", "ServiceConfig"]
