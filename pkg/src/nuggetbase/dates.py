"""Day-resolution date handling shared across the package.

All validity arithmetic runs at day resolution. An open-ended interval is
represented internally as ``end is None``; the serialized form uses the
string sentinel ``"OPEN"``. Finer-grained timestamps are accepted on input
and truncated to the day.
"""
from __future__ import annotations

import re
from datetime import date, timedelta

OPEN = "OPEN"

_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5,
    "june": 6, "july": 7, "august": 8, "september": 9, "october": 10,
    "november": 11, "december": 12,
}

_ISO_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})")
_YEAR_RE = re.compile(r"^(\d{4})$")
# "March 5, 2020" and "5 March 2020"
_MDY_RE = re.compile(r"^([A-Za-z]+)\s+(\d{1,2}),\s*(\d{4})$")
_DMY_RE = re.compile(r"^(\d{1,2})\s+([A-Za-z]+)\s+(\d{4})$")


def parse_date_string(text: str) -> date | None:
    """Parse one of the supported date surface forms, else None.

    Accepted: ISO 8601 (with optional time suffix, truncated), bare year
    (mapped to Jan 1), "March 5, 2020", "5 March 2020".
    """
    s = text.strip()
    m = _ISO_RE.match(s)
    if m:
        try:
            return date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
        except ValueError:
            return None
    m = _YEAR_RE.match(s)
    if m:
        return date(int(m.group(1)), 1, 1)
    m = _MDY_RE.match(s)
    if m:
        month = _MONTHS.get(m.group(1).lower())
        if month:
            try:
                return date(int(m.group(3)), month, int(m.group(2)))
            except ValueError:
                return None
        return None
    m = _DMY_RE.match(s)
    if m:
        month = _MONTHS.get(m.group(2).lower())
        if month:
            try:
                return date(int(m.group(3)), month, int(m.group(1)))
            except ValueError:
                return None
    return None


def parse_timestamp(text: str) -> date:
    """Parse a document timestamp, truncating any sub-day precision."""
    d = parse_date_string(text)
    if d is None:
        raise ValueError(f"unparseable timestamp: {text!r}")
    return d


def format_date(d: date | None) -> str:
    return OPEN if d is None else d.isoformat()


def parse_end(text: str) -> date | None:
    if text == OPEN:
        return None
    return parse_timestamp(text)


def earlier(a: date | None, b: date | None) -> date | None:
    """Min of two end bounds where None means +infinity."""
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def later(a: date, b: date) -> date:
    return max(a, b)


def contains(start: date, end: date | None, t: date) -> bool:
    """Half-open membership test t in [start, end)."""
    if t < start:
        return False
    return end is None or t < end


def overlaps(s1: date, e1: date | None, s2: date, e2: date | None) -> bool:
    """Half-open interval intersection test."""
    if e1 is not None and s2 >= e1:
        return False
    if e2 is not None and s1 >= e2:
        return False
    return True


def next_day(d: date) -> date:
    return d + timedelta(days=1)


def day_number(d: date) -> int:
    """Days since 0001-01-01; used for array-backed metadata filters."""
    return d.toordinal()
