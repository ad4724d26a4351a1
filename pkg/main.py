from __future__ import annotations

import sys
from typing import Optional, Sequence

from dkstp.cli import run


class Application:
    """
    Top-level entry point wiring the command-line surface to the process.
    """

    def __init__(self, argv: Optional[Sequence[str]] = None) -> None:
        self._argv = list(sys.argv[1:] if argv is None else argv)

    # ------------------------------------------------------------------ #
    # Public API
    # ------------------------------------------------------------------ #
    def run(self) -> int:
        """
        Dispatch to the requested subcommand and return its exit code.
        """
        return run(self._argv)


def main() -> None:
    app = Application()
    sys.exit(app.run())


if __name__ == "__main__":
    main()
