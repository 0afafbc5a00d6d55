"""Per-iteration trace records and their JSON-lines file format."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional


class TraceError(ValueError):
    """Raised for malformed or empty traces."""


@dataclass
class TraceRecord:
    """State of the population ``P_iter`` (after ``iter`` completed iterations).

    ``accepted`` is true when iteration ``iter - 1`` changed the population;
    ``replaced_index`` is then the one-count of the changed slot and
    ``replaced_class`` its hot/cold class ("00", "01", "10", "11") in the
    population before the change. ``sizes`` holds ``(|I10|, |Jhot|, |J00|,
    |J10|)`` and, like ``state``, is ``None`` when the population is not
    almost balanced. Positions ``hot``/``cold`` are 1-indexed.
    """

    iter: int
    accepted: bool
    replaced_index: Optional[int]
    diversity: int
    state: Optional[int]
    sizes: Optional[tuple] = None
    hot: Optional[int] = None
    cold: Optional[int] = None
    replaced_class: Optional[str] = None
    optimal: bool = False
    covered: bool = True

    @property
    def jhot(self) -> Optional[int]:
        return None if self.sizes is None else self.sizes[1]

    def to_json(self) -> str:
        d = asdict(self)
        if d["sizes"] is not None:
            d["sizes"] = list(d["sizes"])
        return json.dumps(d, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "TraceRecord":
        try:
            sizes = d.get("sizes")
            rec = cls(
                iter=int(d["iter"]),
                accepted=bool(d["accepted"]),
                replaced_index=d.get("replaced_index"),
                diversity=int(d["diversity"]),
                state=d.get("state"),
                sizes=None if sizes is None else tuple(int(s) for s in sizes),
                hot=d.get("hot"),
                cold=d.get("cold"),
                replaced_class=d.get("replaced_class"),
                optimal=bool(d.get("optimal", False)),
                covered=bool(d.get("covered", True)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TraceError(f"bad trace record {d!r}: {exc}") from None
        if rec.state not in (None, 1, 2, 3):
            raise TraceError(f"bad state {rec.state!r}")
        if rec.sizes is not None and len(rec.sizes) != 4:
            raise TraceError("sizes must have four entries")
        return rec


class TraceWriter:
    """Append-only JSON-lines sink; ``None`` path keeps records in memory only."""

    def __init__(self, path=None, keep: bool = True):
        self.path = None if path is None else Path(path)
        self.records: list[TraceRecord] = []
        self.keep = keep
        self._fh = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "w", encoding="utf-8")

    def append(self, rec: TraceRecord) -> None:
        if self.keep:
            self.records.append(rec)
        if self._fh is not None:
            self._fh.write(rec.to_json() + "\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def iter_trace(path) -> Iterator[TraceRecord]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceError(f"line {lineno}: {exc}") from None
            if not isinstance(d, dict):
                raise TraceError(f"line {lineno}: not an object")
            yield TraceRecord.from_dict(d)


def read_trace(path) -> list[TraceRecord]:
    records = list(iter_trace(path))
    if not records:
        raise TraceError(f"{path}: empty trace")
    return records


def write_trace(path, records: Iterable[TraceRecord]) -> None:
    w = TraceWriter(path, keep=False)
    try:
        for r in records:
            w.append(r)
    finally:
        w.close()
