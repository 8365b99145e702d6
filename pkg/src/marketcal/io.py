"""CSV ingestion and the per-day data container.

Input schema: one row per minute bar, columns (symbol, timestamp, price)
with ISO-8601 timestamps; one file may hold many symbols and days. An
optional header row is skipped. Rows are grouped by (symbol, calendar
date) and sorted by time. Small gaps (up to 5 missing minutes) are
forward-filled and flagged; larger gaps split the session into separate
segments with a warning.
"""

import csv
import warnings
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

from .errors import InputError
from .market import PricePath

__all__ = ["DayData", "ingest_csv", "write_csv"]

_MAX_FILL_MINUTES = 5
_MINUTE = timedelta(minutes=1)


@dataclass
class DayData:
    """One symbol's prices for one trading session (or session segment)."""

    symbol: str
    day: date
    path: PricePath
    filled: list = field(default_factory=list)  # timestamps created by forward fill

    @property
    def timestamps(self) -> list:
        return self.path.timestamps


def _parse_row(row: list, line_no: int):
    if len(row) != 3:
        raise InputError(f"line {line_no}: expected 3 columns (symbol,timestamp,price), got {len(row)}")
    symbol = row[0].strip()
    if not symbol:
        raise InputError(f"line {line_no}: empty symbol")
    try:
        ts = datetime.fromisoformat(row[1].strip())
    except ValueError:
        raise InputError(f"line {line_no}: bad timestamp {row[1]!r}") from None
    try:
        price = float(row[2])
    except ValueError:
        raise InputError(f"line {line_no}: bad price {row[2]!r}") from None
    if not price > 0:
        raise InputError(f"line {line_no}: non-positive price {price}")
    return symbol, ts.replace(second=0, microsecond=0), price


def _segments(symbol: str, day: date, bars: list) -> list:
    """Split on large gaps, forward-fill small ones."""
    out = []
    seg_ts = [bars[0][0]]
    seg_px = [bars[0][1]]
    filled: list = []
    for ts, px in bars[1:]:
        gap = int((ts - seg_ts[-1]) / _MINUTE) - 1  # missing minutes in between
        if gap > _MAX_FILL_MINUTES:
            warnings.warn(
                f"{symbol} {day}: {gap}-minute hole at {seg_ts[-1]}; splitting session",
                stacklevel=2,
            )
            out.append((seg_ts, seg_px, filled))
            seg_ts, seg_px, filled = [ts], [px], []
            continue
        for k in range(gap):
            fill_ts = seg_ts[-1] + _MINUTE
            seg_ts.append(fill_ts)
            seg_px.append(seg_px[-1])
            filled.append(fill_ts)
        seg_ts.append(ts)
        seg_px.append(px)
    out.append((seg_ts, seg_px, filled))
    days = []
    for ts, px, fl in out:
        if len(px) < 2:
            warnings.warn(f"{symbol} {day}: dropping 1-bar segment at {ts[0]}", stacklevel=2)
            continue
        days.append(DayData(symbol=symbol, day=day, path=PricePath(px, timestamps=ts), filled=fl))
    return days


def ingest_csv(path) -> list[DayData]:
    """Parse, group, validate and gap-handle a price CSV."""
    groups: dict[tuple, list] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row or (line_no == 1 and row[0].strip().lower() == "symbol"):
                continue
            symbol, ts, price = _parse_row(row, line_no)
            groups.setdefault((symbol, ts.date()), []).append((ts, price, line_no))

    days: list[DayData] = []
    for (symbol, day), bars in sorted(groups.items()):
        bars.sort(key=lambda b: b[0])
        for (t1, _, l1), (t2, _, l2) in zip(bars, bars[1:]):
            if t1 == t2:
                raise InputError(
                    f"duplicate timestamp {t1.isoformat()} for {symbol} (lines {l1} and {l2})"
                )
        days.extend(_segments(symbol, day, [(t, p) for t, p, _ in bars]))
    return days


def write_csv(days: list[DayData], path):
    """Emit days back to the ingestion schema; floats keep full precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["symbol", "timestamp", "price"])
        for d in days:
            for ts, px in zip(d.path.timestamps, d.path.prices):
                writer.writerow([d.symbol, ts.isoformat(), repr(float(px))])
