"""Module entrypoint for ``python -m nuhlab.cli``."""

from . import main


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
