"""Delimited-text matrices, label files and run manifests.

Matrix files have one header row of sample labels (after a corner cell) and
one row per variable whose first field is the variable label. Files ending
in ``.csv`` are comma separated; anything else is tab separated. Numbers are
written with 17 significant digits, so a write followed by a read returns
the identical float64 values.
"""

import csv
import json
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .exceptions import DataFileError, InputError
from .multiblock import Block, MultiBlockDataset

MANIFEST_FORMAT = "jive-manifest/1"
TRUTH_FORMAT = "jive-truth/1"


class LabeledMatrix(NamedTuple):
    data: np.ndarray
    row_labels: tuple
    column_labels: tuple


def delimiter_for(path):
    return "," if Path(path).suffix.lower() == ".csv" else "\t"


def _parse_float(text, path, row, column):
    try:
        value = float(text)
    except ValueError:
        raise DataFileError(path, f"cannot parse {text!r} as a number", row, column) from None
    if not np.isfinite(value):
        raise DataFileError(path, f"non-finite value {text!r}", row, column)
    return value


def read_matrix(path):
    """Read a labeled matrix file.

    Row and column numbers in error messages count from 1 and include the
    header row and label column, so they match what an editor shows.

    Returns
    -------
    LabeledMatrix
        ``data`` has one row per variable and one column per sample.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter_for(path))]
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise DataFileError(path, "file is empty")
    header = rows[0]
    if len(header) < 2:
        raise DataFileError(path, "header needs a corner cell and at least one sample label",
                            row=1)
    samples = tuple(h.strip() for h in header[1:])
    seen = set()
    for j, s in enumerate(samples, start=2):
        if not s:
            raise DataFileError(path, "empty sample label", row=1, column=j)
        if s in seen:
            raise DataFileError(path, f"duplicate sample label {s!r}", row=1, column=j)
        seen.add(s)
    if len(rows) < 2:
        raise DataFileError(path, "no variable rows")
    width = len(header)
    values = np.empty((len(rows) - 1, width - 1))
    labels = []
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != width:
            raise DataFileError(path, f"expected {width} fields, found {len(r)}", row=i)
        labels.append(r[0].strip())
        for j, cell in enumerate(r[1:], start=2):
            values[i - 2, j - 2] = _parse_float(cell.strip(), path, i, j)
    return LabeledMatrix(values, tuple(labels), samples)


def write_matrix(path, data, row_labels, column_labels, corner=""):
    """Write a labeled matrix with round-trip precision."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape != (len(row_labels), len(column_labels)):
        raise InputError(
            f"matrix of shape {data.shape} does not match "
            f"{len(row_labels)} row and {len(column_labels)} column labels"
        )
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter_for(path), lineterminator="\n")
        w.writerow([corner, *column_labels])
        for label, row in zip(row_labels, data):
            w.writerow([label, *(format(x, ".17g") for x in row)])


def read_blocks(named_paths):
    """Read one matrix file per block into a dataset.

    Parameters
    ----------
    named_paths : list of (name, path)

    Every file must carry the same set of sample labels. Columns are put in
    the order of the first file.
    """
    named_paths = list(named_paths)
    if not named_paths:
        raise InputError("at least one block is required")
    names = [n for n, _ in named_paths]
    if len(set(names)) != len(names):
        raise InputError(f"block names must be unique, got {names}")
    blocks = []
    first_path, first = None, None
    for name, path in named_paths:
        m = read_matrix(path)
        if first is None:
            first_path, first = path, m
            blocks.append(Block(name, m.data, m.row_labels))
            continue
        if len(m.column_labels) != len(first.column_labels):
            raise InputError(
                f"{path} has {len(m.column_labels)} samples but {first_path} has "
                f"{len(first.column_labels)}"
            )
        index = {s: j for j, s in enumerate(m.column_labels)}
        missing = [s for s in first.column_labels if s not in index]
        if missing:
            raise InputError(
                f"sample {missing[0]!r} of {first_path} is missing from {path}"
            )
        order = [index[s] for s in first.column_labels]
        blocks.append(Block(name, m.data[:, order], m.row_labels))
    return MultiBlockDataset(tuple(blocks), first.column_labels)


def write_dataset(directory, ds, suffix=".tsv"):
    """Write every block as ``<name><suffix>``; returns the file names."""
    directory = Path(directory)
    files = []
    for b in ds.blocks:
        fname = f"{b.name}{suffix}"
        write_matrix(directory / fname, b.data, b.variable_labels, ds.sample_labels)
        files.append(fname)
    return files


def read_labels(path):
    """Read a two-column ``sample, group`` file with a header row.

    Returns a dict from sample label to group label.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter_for(path)) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise DataFileError(path, "expected a header row and at least one label")
    out = {}
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != 2:
            raise DataFileError(path, f"expected 2 fields, found {len(r)}", row=i)
        sample, group = r[0].strip(), r[1].strip()
        if sample in out:
            raise DataFileError(path, f"duplicate sample {sample!r}", row=i, column=1)
        if not group:
            raise DataFileError(path, "empty group label", row=i, column=2)
        out[sample] = group
    return out


def write_labels(path, samples, groups):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter_for(path), lineterminator="\n")
        w.writerow(["sample", "group"])
        for s, g in zip(samples, groups):
            w.writerow([s, g])


def labels_for(mapping, samples, source):
    """Group labels in sample order; every sample must be present."""
    missing = [s for s in samples if s not in mapping]
    if missing:
        raise InputError(f"{source}: no group label for sample {missing[0]!r}")
    return np.array([mapping[s] for s in samples])


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (tuple, set)):
        return list(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, payload, format_tag=MANIFEST_FORMAT):
    """Write a JSON document carrying a ``format`` tag; keys are sorted."""
    doc = {"format": format_tag, **payload}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def read_json(path, format_tag=MANIFEST_FORMAT):
    path = Path(path)
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFileError(path, exc.msg, row=exc.lineno, column=exc.colno) from None
    if doc.get("format") != format_tag:
        raise DataFileError(path, f"expected format {format_tag!r}, found {doc.get('format')!r}")
    return doc
