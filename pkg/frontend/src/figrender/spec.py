"""Figure specification and CSV loading/validation."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

SCAN_COLUMNS = ["family_k", "d", "n_min", "m", "threshold", "seed"]
FIT_COLUMNS = ["family_k", "a", "c", "b", "rss"]


class InvalidInput(ValueError):
    """Missing or malformed figure spec or CSV input."""


@dataclass(frozen=True)
class FigureSpec:
    scan_csv: str
    fit_csv: str
    family_k: int
    output: str
    title: str = ""

    @classmethod
    def from_json_file(cls, path: str) -> "FigureSpec":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise InvalidInput(f"cannot read spec file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"spec file is not valid JSON: {exc}") from exc
        known = {"scan_csv", "fit_csv", "family_k", "output", "title"}
        unknown = set(raw) - known
        if unknown:
            raise InvalidInput(f"unknown spec keys: {sorted(unknown)}")
        for key in ("scan_csv", "fit_csv", "family_k", "output"):
            if key not in raw:
                raise InvalidInput(f"spec requires key {key!r}")
        return cls(
            scan_csv=str(raw["scan_csv"]),
            fit_csv=str(raw["fit_csv"]),
            family_k=int(raw["family_k"]),
            output=str(raw["output"]),
            title=str(raw.get("title", "")),
        )


def _read_rows(path: str, columns: list[str]) -> list[list[str]]:
    if not os.path.exists(path):
        raise InvalidInput(f"CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInput(f"CSV is empty: {path}") from None
        if header != columns:
            raise InvalidInput(f"CSV {path} header {header} != expected {columns}")
        rows = [row for row in reader if row]
    if not rows:
        raise InvalidInput(f"CSV has no data rows: {path}")
    for row in rows:
        if len(row) != len(columns):
            raise InvalidInput(f"CSV {path} row width {len(row)} != {len(columns)}")
        for value in row:
            try:
                float(value)
            except ValueError:
                raise InvalidInput(f"CSV {path} has non-numeric value {value!r}") from None
    return rows


def load_scan_points(path: str, family_k: int) -> list[tuple[float, float]]:
    """(d, n_min) points of one family from a scan CSV, sorted by d."""
    rows = _read_rows(path, SCAN_COLUMNS)
    points = [
        (float(r[1]), float(r[2])) for r in rows if int(float(r[0])) == family_k
    ]
    if not points:
        raise InvalidInput(f"scan CSV has no rows for family_k={family_k}")
    return sorted(points)


def load_fit_curves(path: str, family_k: int) -> list[tuple[float, float, float]]:
    """(a, c, b) rows of one family from a fit CSV, in file order.

    The fit experiment writes the free power-law fit first and the
    fixed-exponent reference second; both are returned.
    """
    rows = _read_rows(path, FIT_COLUMNS)
    curves = [
        (float(r[1]), float(r[2]), float(r[3]))
        for r in rows
        if int(float(r[0])) == family_k
    ]
    if not curves:
        raise InvalidInput(f"fit CSV has no rows for family_k={family_k}")
    return curves
