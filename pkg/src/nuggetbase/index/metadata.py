"""Array-backed validity metadata for fast stabbing queries.

Columns (t_start, t_end, status, scope) are kept as parallel numpy arrays
so a point-in-time filter is a handful of vectorized comparisons. Open
ends are stored as a large day-number sentinel.
"""
from __future__ import annotations

from datetime import date
from typing import Optional

import numpy as np

from ..dates import day_number
from ..model import Status, View

OPEN_SENTINEL = np.int64(2**31)

_STATUS_CODE = {Status.ACTIVE: 0, Status.CONTESTED: 1, Status.DEPRECATED: 2}


class MetadataIndex:
    def __init__(self) -> None:
        self._capacity = 1024
        self._n = 0
        self._t_start = np.zeros(self._capacity, dtype=np.int64)
        self._t_end = np.zeros(self._capacity, dtype=np.int64)
        self._status = np.zeros(self._capacity, dtype=np.int8)
        self._scope = np.zeros(self._capacity, dtype=np.int32)
        self._scope_ids: dict[str, int] = {"global": 0}

    def __len__(self) -> int:
        return self._n

    def _grow(self) -> None:
        self._capacity *= 2
        for name in ("_t_start", "_t_end", "_status", "_scope"):
            old = getattr(self, name)
            fresh = np.zeros(self._capacity, dtype=old.dtype)
            fresh[: self._n] = old[: self._n]
            setattr(self, name, fresh)

    def scope_id(self, scope_str: str) -> int:
        sid = self._scope_ids.get(scope_str)
        if sid is None:
            sid = self._scope_ids[scope_str] = len(self._scope_ids)
        return sid

    def add(
        self, t_start: date, t_end: Optional[date], status: Status, scope_str: str
    ) -> int:
        if self._n == self._capacity:
            self._grow()
        h = self._n
        self._t_start[h] = day_number(t_start)
        self._t_end[h] = OPEN_SENTINEL if t_end is None else day_number(t_end)
        self._status[h] = _STATUS_CODE[status]
        self._scope[h] = self.scope_id(scope_str)
        self._n += 1
        return h

    def update(self, handle: int, t_end: Optional[date], status: Status) -> None:
        self._t_end[handle] = OPEN_SENTINEL if t_end is None else day_number(t_end)
        self._status[handle] = _STATUS_CODE[status]

    def mask(
        self,
        t: date,
        view: View,
        scope_strs: Optional[set[str]] = None,
        ignore_validity: bool = False,
    ) -> np.ndarray:
        """Boolean retrievability mask at time t under the given view."""
        n = self._n
        day = day_number(t)
        status = self._status[:n]
        if view is View.ACTIVE_PLUS_CONTESTED:
            ok = status <= 1
        else:
            ok = status == 0
        if not ignore_validity:
            ok = ok & (self._t_start[:n] <= day) & (day < self._t_end[:n])
        if scope_strs is not None:
            allowed = np.array(
                [self._scope_ids.get(s, -1) for s in scope_strs], dtype=np.int32
            )
            ok = ok & np.isin(self._scope[:n], allowed)
        return ok
