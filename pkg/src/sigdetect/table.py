"""Event tables: feature matrix plus On/Off region tags, group keys, labels."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

ON = -1
UNLABELED = -2


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def parse_region(text):
    """``"on"`` -> ON, ``"off"`` / ``"off:<k>"`` -> k, ``"unlabeled"`` -> UNLABELED."""
    value = text.strip().lower()
    if value == "on":
        return ON
    if value == "off":
        return 0
    if value == "unlabeled":
        return UNLABELED
    if value.startswith("off:"):
        index = value[4:]
        if index.isdigit():
            return int(index)
    raise DataError(f"unknown region literal {text!r}")


def format_region(code):
    if code == ON:
        return "on"
    if code == UNLABELED:
        return "unlabeled"
    return f"off:{int(code)}"


def _parse_label(text):
    value = text.strip()
    if value in ("1", "+1"):
        return 1
    if value == "-1":
        return -1
    raise DataError(f"clean label must be +1 or -1, got {text!r}")


@dataclass(frozen=True)
class EventTable:
    features: np.ndarray
    region: np.ndarray
    group: np.ndarray = None
    clean_label: np.ndarray = None
    feature_names: tuple = field(default=None)

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] < 1:
            raise DataError("features must be an n x d matrix with d >= 1")
        if not np.all(np.isfinite(X)):
            raise DataError("features must be finite")
        n = X.shape[0]
        region = np.asarray(self.region, dtype=np.int64)
        if region.shape != (n,):
            raise DataError("region tags must have one entry per row")
        if np.any(region < UNLABELED):
            raise DataError("invalid region code")
        group = self.group
        if group is None:
            group = np.zeros(n, dtype=np.int64)
        group = np.asarray(group)
        if group.shape != (n,):
            raise DataError("group keys must have one entry per row")
        label = self.clean_label
        if label is not None:
            label = np.asarray(label, dtype=np.int64)
            if label.shape != (n,) or not np.all(np.isin(label, (-1, 1))):
                raise DataError("clean labels must be +1/-1, one per row")
        names = self.feature_names
        if names is None:
            names = tuple(f"f{j}" for j in range(X.shape[1]))
        names = tuple(names)
        if len(names) != X.shape[1]:
            raise DataError("feature_names does not match the feature count")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "clean_label", label)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def on_mask(self):
        return self.region == ON

    @property
    def off_mask(self):
        return self.region >= 0

    @property
    def labeled_mask(self):
        return self.region != UNLABELED

    @property
    def n_on(self):
        return int(np.count_nonzero(self.on_mask))

    @property
    def n_off(self):
        return int(np.count_nonzero(self.off_mask))

    def take(self, rows):
        rows = np.asarray(rows)
        return EventTable(
            self.features[rows],
            self.region[rows],
            self.group[rows],
            None if self.clean_label is None else self.clean_label[rows],
            self.feature_names,
        )

    def with_region(self, region):
        return EventTable(self.features, region, self.group, self.clean_label,
                          self.feature_names)


@dataclass(frozen=True)
class CsvSchema:
    """Which columns carry metadata; every other column is a numeric feature."""

    region_col: str = "region"
    group_col: str | None = None
    label_col: str | None = None


def read_event_csv(source, schema=CsvSchema()):
    """Parse an event table from a path or text stream."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_event_csv(fh, schema)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty file: header row missing") from None
    header = [h.strip() for h in header]
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")
    meta = {"region": schema.region_col, "group": schema.group_col, "label": schema.label_col}
    pos = {}
    for role, name in meta.items():
        if name is None:
            continue
        if name not in header:
            if role == "region":
                raise DataError(f"region column {name!r} not found")
            raise DataError(f"{role} column {name!r} not found")
        pos[role] = header.index(name)
    feature_cols = [j for j, h in enumerate(header) if j not in pos.values()]
    if not feature_cols:
        raise DataError("no feature columns")
    rows, region, group, label = [], [], [], []
    for lineno, record in enumerate(reader, start=2):
        if not record or (len(record) == 1 and not record[0].strip()):
            continue
        if len(record) != len(header):
            raise DataError(f"row {lineno}: expected {len(header)} fields, got {len(record)}")
        values = []
        for j in feature_cols:
            cell = record[j].strip()
            if not cell:
                raise DataError(f"row {lineno}, column {header[j]!r}: missing value")
            try:
                x = float(cell)
            except ValueError:
                raise DataError(f"row {lineno}, column {header[j]!r}: "
                                f"non-numeric value {cell!r}") from None
            if not math.isfinite(x):
                raise DataError(f"row {lineno}, column {header[j]!r}: non-finite value")
            values.append(x)
        rows.append(values)
        try:
            region.append(parse_region(record[pos["region"]]))
            if "label" in pos:
                label.append(_parse_label(record[pos["label"]]))
        except DataError as exc:
            raise DataError(f"row {lineno}: {exc}") from None
        if "group" in pos:
            group.append(record[pos["group"]].strip())
    if not rows:
        raise DataError("no data rows")
    return EventTable(
        np.array(rows, dtype=np.float64),
        np.array(region, dtype=np.int64),
        np.array(group) if "group" in pos else None,
        np.array(label, dtype=np.int64) if "label" in pos else None,
        tuple(header[j] for j in feature_cols),
    )


def write_event_csv(table, target, schema=CsvSchema()):
    """Write ``table`` so that :func:`read_event_csv` reproduces it exactly."""
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            return write_event_csv(table, fh, schema)
    writer = csv.writer(target, lineterminator="\n")
    header = list(table.feature_names) + [schema.region_col]
    if schema.group_col is not None:
        header.append(schema.group_col)
    if schema.label_col is not None:
        if table.clean_label is None:
            raise DataError("table has no clean labels to write")
        header.append(schema.label_col)
    writer.writerow(header)
    for i in range(table.n_rows):
        record = [repr(float(x)) for x in table.features[i]]
        record.append(format_region(table.region[i]))
        if schema.group_col is not None:
            record.append(str(table.group[i]))
        if schema.label_col is not None:
            record.append("+1" if table.clean_label[i] > 0 else "-1")
        writer.writerow(record)


def event_csv_text(table, schema=CsvSchema()):
    buf = io.StringIO()
    write_event_csv(table, buf, schema)
    return buf.getvalue()
