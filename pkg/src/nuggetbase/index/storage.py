"""Embedded single-file record store.

SQLite-backed: rows are zlib-compressed JSON blobs keyed by nugget id,
plus review-queue state. Writes stage inside the connection's transaction
and become durable on commit(); a storage failure rolls back with no
partial visibility. The on-disk layout is private; interchange happens
through the JSONL export only.
"""
from __future__ import annotations

import json
import sqlite3
import zlib
from datetime import date
from pathlib import Path
from typing import Iterator, Optional

from ..dates import parse_timestamp
from ..model import NuggetRecord, record_from_dict, record_to_dict


class RecordStore:
    """get/put/scan/commit over one SQLite file (or ':memory:')."""

    def __init__(self, path: str | Path = ":memory:"):
        self.path = str(path)
        self._con = sqlite3.connect(self.path, check_same_thread=False)
        self._con.execute("PRAGMA journal_mode=WAL") if self.path != ":memory:" else None
        self._con.executescript(
            """
            CREATE TABLE IF NOT EXISTS records (
                id TEXT PRIMARY KEY,
                data BLOB NOT NULL
            );
            CREATE TABLE IF NOT EXISTS reviews (
                nugget_id TEXT NOT NULL,
                reason TEXT NOT NULL,
                queued_at TEXT NOT NULL,
                resolved INTEGER NOT NULL DEFAULT 0,
                PRIMARY KEY (nugget_id, reason)
            );
            CREATE TABLE IF NOT EXISTS meta (k TEXT PRIMARY KEY, v TEXT);
            """
        )
        self._con.commit()

    @staticmethod
    def _encode(record: NuggetRecord) -> bytes:
        payload = json.dumps(
            record_to_dict(record), ensure_ascii=False, separators=(",", ":")
        )
        return zlib.compress(payload.encode("utf-8"), 6)

    @staticmethod
    def _decode(blob: bytes) -> NuggetRecord:
        return record_from_dict(json.loads(zlib.decompress(blob).decode("utf-8")))

    def get(self, nugget_id: str) -> Optional[NuggetRecord]:
        row = self._con.execute(
            "SELECT data FROM records WHERE id = ?", (nugget_id,)
        ).fetchone()
        return self._decode(row[0]) if row else None

    def put(self, record: NuggetRecord) -> None:
        self._con.execute(
            "INSERT OR REPLACE INTO records (id, data) VALUES (?, ?)",
            (record.id, self._encode(record)),
        )

    def scan(self) -> Iterator[NuggetRecord]:
        for (blob,) in self._con.execute("SELECT data FROM records ORDER BY id"):
            yield self._decode(blob)

    def count(self) -> int:
        return self._con.execute("SELECT COUNT(*) FROM records").fetchone()[0]

    def commit(self) -> None:
        try:
            self._con.commit()
        except sqlite3.Error:
            self._con.rollback()
            raise

    def rollback(self) -> None:
        self._con.rollback()

    # review queue rows ride in the same file / transaction

    def put_review(
        self, nugget_id: str, reason: str, queued_at: date, resolved: bool
    ) -> None:
        self._con.execute(
            "INSERT OR REPLACE INTO reviews (nugget_id, reason, queued_at, resolved)"
            " VALUES (?, ?, ?, ?)",
            (nugget_id, reason, queued_at.isoformat(), int(resolved)),
        )

    def scan_reviews(self) -> Iterator[tuple[str, str, date, bool]]:
        rows = self._con.execute(
            "SELECT nugget_id, reason, queued_at, resolved FROM reviews"
            " ORDER BY queued_at, nugget_id, reason"
        )
        for nugget_id, reason, queued_at, resolved in rows:
            yield nugget_id, reason, parse_timestamp(queued_at), bool(resolved)

    def set_meta(self, key: str, value: str) -> None:
        self._con.execute(
            "INSERT OR REPLACE INTO meta (k, v) VALUES (?, ?)", (key, value)
        )

    def get_meta(self, key: str) -> Optional[str]:
        row = self._con.execute("SELECT v FROM meta WHERE k = ?", (key,)).fetchone()
        return row[0] if row else None

    def file_size(self) -> int:
        if self.path == ":memory:":
            return 0
        self._con.execute("PRAGMA wal_checkpoint(TRUNCATE)")
        return Path(self.path).stat().st_size

    def close(self) -> None:
        self._con.close()
