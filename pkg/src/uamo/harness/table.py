"""Rectangular result tables with a metadata block; CSV and JSON emitters."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Column:
    name: str
    unit: str = ""


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = "%.17g" % value
        # keep floats recognisable as floats on the way back in
        return text + ".0" if text.lstrip("-").isdigit() else text
    return str(value)


def _read(text: str):
    if text == "true":
        return True
    if text == "false":
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _plain(value):
    """numpy scalars to Python scalars."""
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()
    return value


@dataclass
class ResultTable:
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def __post_init__(self):
        self.columns = [c if isinstance(c, Column) else Column(*c) if isinstance(c, tuple) else Column(c)
                        for c in self.columns]
        self.rows = [tuple(_plain(v) for v in r) for r in self.rows]
        for r in self.rows:
            self._check(r)

    def _check(self, row):
        if len(row) != len(self.columns):
            raise ValueError(f"row of length {len(row)} in a table of {len(self.columns)} columns")

    @property
    def names(self) -> list:
        return [c.name for c in self.columns]

    def append(self, *row):
        row = tuple(_plain(v) for v in row)
        self._check(row)
        self.rows.append(row)

    def column(self, name) -> list:
        k = self.names.index(name)
        return [r[k] for r in self.rows]

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        if not isinstance(other, ResultTable):
            return NotImplemented
        return (self.columns, self.rows, self.metadata, self.failures) == (
            other.columns, other.rows, other.metadata, other.failures)

    # -- csv ---------------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        meta = dict(self.metadata)
        meta["units"] = {c.name: c.unit for c in self.columns}
        meta["failures"] = self.failures
        for key in sorted(meta):
            buf.write(f"# {key}: {json.dumps(meta[key], sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.names)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        meta, body = {}, []
        for line in text.splitlines():
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                meta[key] = json.loads(value)
            else:
                body.append(line)
        reader = csv.reader(body)
        names = next(reader)
        units = meta.pop("units", {})
        failures = meta.pop("failures", [])
        rows = [tuple(_read(v) for v in r) for r in reader]
        return cls([Column(n, units.get(n, "")) for n in names], rows, meta, failures)

    # -- json --------------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "columns": [{"name": c.name, "unit": c.unit} for c in self.columns],
            "rows": [list(r) for r in self.rows],
            "metadata": self.metadata,
            "failures": self.failures,
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        doc = json.loads(text)
        cols = [Column(c["name"], c["unit"]) for c in doc["columns"]]
        return cls(cols, [tuple(r) for r in doc["rows"]], doc["metadata"], doc["failures"])

    def dumps(self, fmt: str = "csv") -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()
