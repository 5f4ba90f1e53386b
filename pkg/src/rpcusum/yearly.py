"""Reshape a daily (date, value) series into a years x 365 matrix.

February 29 is dropped so every row has 365 columns. By default a year is
kept only if all 365 remaining days are present; with interpolation, gaps
inside a year are filled linearly over the day index (flat at the edges).
Because downstream detection treats rows as consecutive time points, the
kept years must be contiguous; if exclusions split the record, the longest
contiguous block is kept (the most recent one on ties) and the rest is
dropped with a warning.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

#: (month, day) pairs of a non-leap year, in calendar order
_TEMPLATE_DAYS = [
    (date.month, date.day)
    for date in (
        dt.date(2001, 1, 1) + dt.timedelta(days=i) for i in range(365)
    )
]
_DAY_INDEX = {md: i for i, md in enumerate(_TEMPLATE_DAYS)}


@dataclass(frozen=True)
class YearlyMatrix:
    values: np.ndarray
    year_labels: tuple[int, ...]
    station_id: str = ""

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != 365:
            raise ValueError("yearly matrix must have exactly 365 columns")
        if values.shape[0] != len(self.year_labels):
            raise ValueError("row count does not match year labels")
        years = self.year_labels
        if any(b - a != 1 for a, b in zip(years, years[1:])):
            raise ValueError("year labels must be strictly increasing and contiguous")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "year_labels", tuple(int(y) for y in years))


def read_daily_csv(path: str, header: bool = False) -> list[tuple[dt.date, float]]:
    """Parse a two-column (date, value) CSV; dates are ISO year-month-day."""
    rows: list[tuple[dt.date, float]] = []
    seen: set[dt.date] = set()
    with open(path, "r", encoding="utf-8") as fh:
        skip_header = header
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if skip_header:
                skip_header = False
                continue
            parts = [cell.strip() for cell in line.split(",")]
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 2 columns, found {len(parts)}")
            try:
                date = dt.date.fromisoformat(parts[0])
            except ValueError:
                raise ValueError(
                    f"line {lineno}: could not parse {parts[0]!r} as a date"
                ) from None
            try:
                value = float(parts[1])
            except ValueError:
                raise ValueError(
                    f"line {lineno}: could not parse {parts[1]!r} as a number"
                ) from None
            if date in seen:
                raise ValueError(f"line {lineno}: duplicated date {date.isoformat()}")
            seen.add(date)
            rows.append((date, value))
    if not rows:
        raise ValueError(f"no rows in {path}")
    rows.sort(key=lambda item: item[0])
    return rows


def reshape_yearly(
    rows: list[tuple[dt.date, float]],
    interpolate: bool = False,
    station_id: str = "",
) -> tuple[YearlyMatrix, list[str]]:
    """Group daily observations by calendar year; returns (matrix, warnings)."""
    by_year: dict[int, dict[int, float]] = {}
    for date, value in rows:
        if date.month == 2 and date.day == 29:
            continue
        by_year.setdefault(date.year, {})[_DAY_INDEX[(date.month, date.day)]] = value

    warnings: list[str] = []
    kept: dict[int, np.ndarray] = {}
    for year in sorted(by_year):
        days = by_year[year]
        if len(days) == 365:
            row = np.empty(365)
            for idx, value in days.items():
                row[idx] = value
            kept[year] = row
        elif interpolate:
            known = np.array(sorted(days))
            row = np.interp(np.arange(365), known, [days[i] for i in known])
            kept[year] = row
            warnings.append(
                f"year {year}: {365 - len(days)} missing days filled by interpolation"
            )
        else:
            warnings.append(f"year {year}: {365 - len(days)} missing days, excluded")

    if not kept:
        raise ValueError("no complete years to reshape")

    years = sorted(kept)
    blocks: list[list[int]] = [[years[0]]]
    for year in years[1:]:
        if year == blocks[-1][-1] + 1:
            blocks[-1].append(year)
        else:
            blocks.append([year])
    block = max(blocks, key=lambda b: (len(b), b[0]))
    if len(blocks) > 1:
        dropped = sorted(set(years) - set(block))
        warnings.append(
            f"kept contiguous years {block[0]}..{block[-1]}; "
            f"dropped non-contiguous years {', '.join(map(str, dropped))}"
        )
    matrix = YearlyMatrix(
        values=np.vstack([kept[year] for year in block]),
        year_labels=tuple(block),
        station_id=station_id,
    )
    return matrix, warnings


def save_yearly(matrix: YearlyMatrix, path: str) -> None:
    """Comment header (station, years), then one 365-value CSV row per year.

    The body is plain numeric CSV, so the file feeds straight into the
    detection commands, which skip '#' comment lines.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# station: {matrix.station_id}\n")
        fh.write(f"# years: {matrix.year_labels[0]}..{matrix.year_labels[-1]}\n")
        for row in matrix.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_yearly(path: str) -> YearlyMatrix:
    station = ""
    years: tuple[int, ...] | None = None
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("station:"):
                    station = body[len("station:"):].strip()
                elif body.startswith("years:"):
                    first, last = body[len("years:"):].strip().split("..")
                    years = tuple(range(int(first), int(last) + 1))
                continue
            values.append([float(cell) for cell in line.split(",")])
    if years is None:
        raise ValueError(f"missing years header in {path}")
    return YearlyMatrix(
        values=np.asarray(values), year_labels=years, station_id=station
    )
