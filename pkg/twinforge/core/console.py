"""
Colored console logging shared by every long-running component.
"""

from __future__ import annotations

__all__ = ["Console", "Severity", "silent"]

import datetime
import sys
import typing as t

from colorama import Fore

Severity = t.Literal["INFO", "WARNING", "ERROR"]

_PREFIX: t.Dict[str, t.Tuple[str, str]] = {
    "INFO": (Fore.LIGHTGREEN_EX, "[+]"),
    "WARNING": (Fore.LIGHTYELLOW_EX, "[!]"),
    "ERROR": (Fore.LIGHTRED_EX, "[-]"),
}
_LEVEL: t.Dict[str, int] = {"ERROR": 0, "WARNING": 1, "INFO": 2}


class Console:
    """
    Logs messages to standard error with a colored severity prefix.

    Parameters
    ----------
    enabled : bool
        Whether anything is printed at all. Defaults to True.
    verbosity : int
        0 prints errors only, 1 adds warnings, 2 adds info. Defaults to 1.
    suppress_errors : bool
        Drops warnings and errors even when enabled. Defaults to False.
    stream : Optional[TextIO]
        Where to write. Defaults to `sys.stderr`, resolved at call time.

    Example
    -------
    ```python
    console = Console(verbosity=2)
    console.log("segmenting 2 frames")
    console.log("rank-deficient posture data", "WARNING")
    ```
    """

    def __init__(
        self,
        enabled: bool = True,
        verbosity: int = 1,
        suppress_errors: bool = False,
        stream: t.Optional[t.TextIO] = None,
    ) -> None:
        self._enabled = enabled
        self._verbosity = verbosity
        self._suppress_errors = suppress_errors
        self._stream = stream

    @property
    def enabled(self) -> bool:
        return self._enabled

    def log(self, message: str, severity: Severity = "INFO") -> None:
        """
        Logs the message to the console with the corresponding severity.

        Parameters
        ----------
        message : str
            The message to log.
        severity : Literal["INFO", "WARNING", "ERROR"]
            The severity of the message. Defaults to INFO.
        """
        if not self._enabled:
            return
        if severity not in _PREFIX:
            severity = "WARNING"
            message = f"unrecognized severity: {message}"
        if severity != "INFO" and self._suppress_errors:
            return
        if _LEVEL[severity] > self._verbosity:
            return
        color, prefix = _PREFIX[severity]
        current_time = datetime.datetime.now().strftime("%a %m/%d/%Y at %I:%M:%S%p")
        stream = self._stream if self._stream is not None else sys.stderr
        print(f"{color}{prefix}{Fore.RESET} On {current_time} {message}", file=stream)

    def info(self, message: str) -> None:
        self.log(message, "INFO")

    def warning(self, message: str) -> None:
        self.log(message, "WARNING")

    def error(self, message: str) -> None:
        self.log(message, "ERROR")


silent = Console(enabled=False)
"""
Shared disabled console, the default for library calls.
"""
