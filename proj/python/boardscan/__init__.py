"""Chessboard photos to FEN placement strings."""

try:
    from ._boardscan import *  # noqa: F401,F403
    from ._boardscan import __version__
except ImportError:
    # Build tree: the extension sits next to this package rather than inside it.
    from _boardscan import *  # noqa: F401,F403
    from _boardscan import __version__

__all__ = [name for name in dir() if not name.startswith("_")]
