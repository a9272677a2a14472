"""
🚀 Plumbing used by every package.

Includes:

- errors: Exceptions raised by the toolkit.
- defaults: Documented default constants.
- console: Colored console logging.
- codec: msgspec JSON and msgpack codecs that understand numpy arrays.
"""

__all__ = ["errors", "defaults", "console", "codec"]

from . import codec, console, defaults, errors
