"""Command line entry: ``figrender <spec.json>``.

Exit code 0 on success, 2 on a missing or invalid spec/CSV.
"""

from __future__ import annotations

import sys

from figrender.render import render
from figrender.spec import FigureSpec, InvalidInput


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 1:
        print("usage: figrender <figure-spec.json>", file=sys.stderr)
        return 2
    try:
        spec = FigureSpec.from_json_file(args[0])
        out = render(spec)
    except InvalidInput as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
