"""Module entry point: ``python -m radargest``."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
