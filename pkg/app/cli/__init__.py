from .router import cli

__all__ = ["cli"]
