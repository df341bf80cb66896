"""Dataset loading (CSV, LIBSVM) and the per-epoch record CSV format."""

from __future__ import annotations

import csv
import io
import os

import numpy as np

from ..core import RunRecord
from ..problems.data import Dataset

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ("epoch", "iter", "time_s", "grad_calc_count", "cost", "optgap", "gnorm", "reg")
_SCHEMA_LINE = f"# stochkit-record v{CSV_SCHEMA_VERSION}"


class DatasetParseError(ValueError):
    """Malformed dataset file; ``line`` is 1-based."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _read_csv(path, text):
    rows, labels = [], []
    width = None
    for lineno, line in _data_lines(text):
        fields = [f.strip() for f in line.split(",")]
        if width is None:
            width = len(fields)
            if width < 2:
                raise DatasetParseError(path, lineno, "need at least one feature and a label")
        elif len(fields) != width:
            raise DatasetParseError(path, lineno, f"expected {width} fields, found {len(fields)}")
        try:
            values = [float(f) for f in fields]
        except ValueError:
            bad = next(f for f in fields if not _is_float(f))
            raise DatasetParseError(path, lineno, f"malformed entry {bad!r}") from None
        rows.append(values[:-1])
        labels.append(values[-1])
    if not rows:
        raise DatasetParseError(path, 0, "no data rows")
    return np.array(rows), np.array(labels)


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def _read_libsvm(path, text, n_features=None):
    entries, labels = [], []
    max_index = 0
    for lineno, line in _data_lines(text):
        tokens = line.split()
        try:
            labels.append(float(tokens[0]))
        except ValueError:
            raise DatasetParseError(path, lineno, f"malformed label {tokens[0]!r}") from None
        row = {}
        for tok in tokens[1:]:
            key, sep, value = tok.partition(":")
            try:
                if not sep:
                    raise ValueError
                j = int(key)
                v = float(value)
            except ValueError:
                raise DatasetParseError(path, lineno, f"malformed entry {tok!r}") from None
            if j < 1:
                raise DatasetParseError(path, lineno, f"feature index {j} < 1")
            if j in row:
                raise DatasetParseError(path, lineno, f"duplicate feature index {j}")
            if n_features is not None and j > n_features:
                raise DatasetParseError(path, lineno, f"feature index {j} exceeds n_features={n_features}")
            row[j] = v
            max_index = max(max_index, j)
        entries.append(row)
    if not entries:
        raise DatasetParseError(path, 0, "no data rows")
    d = n_features if n_features is not None else max_index
    X = np.zeros((len(entries), d))
    for i, row in enumerate(entries):
        for j, v in row.items():
            X[i, j - 1] = v
    return X, np.array(labels)


def labels_for(family, y):
    """Convert raw labels for a problem family: ``linear``, ``binary`` or ``multiclass``.

    Binary labels become +-1 (the smaller of the two values maps to -1);
    multiclass labels become 0-based indices in sorted order.
    """
    y = np.asarray(y, dtype=float)
    if family == "linear":
        return y
    values = np.unique(y)
    if family == "binary":
        if values.size > 2:
            raise ValueError(f"binary problem but {values.size} distinct labels")
        if values.size == 1:
            return np.where(y > 0, 1.0, -1.0)
        return np.where(y == values[1], 1.0, -1.0)
    if family == "multiclass":
        return np.searchsorted(values, y).astype(int)
    raise ValueError(f"unknown label family {family!r}")


def load_dataset(path, format="csv", family=None, n_features=None) -> Dataset:
    """Read a dense CSV (label in the last column) or LIBSVM file.

    Blank lines and ``#`` comments are skipped.  With ``family`` set the
    labels are converted by :func:`labels_for`, otherwise returned as read.
    Ragged rows and malformed entries raise :class:`DatasetParseError`
    carrying the line number.
    """
    path = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if format == "csv":
        X, y = _read_csv(path, text)
    elif format == "libsvm":
        X, y = _read_libsvm(path, text, n_features)
    else:
        raise ValueError(f"unknown format {format!r}; valid: csv, libsvm")
    if family is not None:
        y = labels_for(family, y)
    n_classes = int(y.max()) + 1 if family == "multiclass" else None
    return Dataset(X, y, n_classes=n_classes)


def _fmt(x):
    return repr(float(x))


def record_to_csv(record: RunRecord) -> str:
    """Serialize a record; floats use ``repr`` so they round-trip exactly."""
    buf = io.StringIO()
    buf.write(_SCHEMA_LINE + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for e in range(len(record)):
        writer.writerow([e, record.iter[e], _fmt(record.time[e]), record.grad_calc_count[e],
                         _fmt(record.cost[e]), _fmt(record.optgap[e]), _fmt(record.gnorm[e]), _fmt(record.reg[e])])
    return buf.getvalue()


def write_record_csv(record: RunRecord, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(record_to_csv(record))


def read_record_csv(path) -> RunRecord:
    """Parse a record CSV written by :func:`write_record_csv`."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != _SCHEMA_LINE:
            raise ValueError(f"{path}: unsupported record schema line {first!r}")
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_COLUMNS:
            raise ValueError(f"{path}: columns {header} do not match {CSV_COLUMNS}")
        record = RunRecord()
        for lineno, row in enumerate(reader, start=3):
            if len(row) != len(CSV_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields")
            epoch, it, t, count, cost, gap, gnorm, reg = row
            if int(epoch) != len(record):
                raise ValueError(f"{path}:{lineno}: epoch {epoch} out of sequence")
            record.iter.append(int(it))
            record.time.append(float(t))
            record.grad_calc_count.append(int(count))
            record.cost.append(float(cost))
            record.optgap.append(float(gap))
            record.gnorm.append(float(gnorm))
            record.reg.append(float(reg))
    return record
