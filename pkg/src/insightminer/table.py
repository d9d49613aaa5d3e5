"""Columnar tables, subspace filters and group-by views.

A :class:`Dataset` is an immutable, typed column store loaded from CSV.  Views
are computed with numpy over per-column integer codes, so filtering and
grouping stay fast enough for the beam search to evaluate thousands of
candidate subspaces.
"""
import csv
import datetime
import enum
import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .exceptions import FormatError, IncompatibleMeasure, UnknownColumn

Cell = Union[None, int, float, str]

DEFAULT_TEMPORAL_HINTS = ("year", "date", "month")
DEFAULT_ORDINAL_MAX_DISTINCT = 10

_INT_RE = re.compile(r"^[+-]?\d+$")


class ColumnKind(str, enum.Enum):
    NUMERIC = "Numeric"
    CATEGORICAL = "Categorical"
    ORDINAL = "Ordinal"
    TEMPORAL = "Temporal"

    @property
    def orderable(self):
        return self is not ColumnKind.CATEGORICAL


class Agg(str, enum.Enum):
    COUNT = "COUNT"
    SUM = "SUM"
    MEAN = "MEAN"
    MIN = "MIN"
    MAX = "MAX"


_AGG_ALIASES = {"AVG": Agg.MEAN, "AVERAGE": Agg.MEAN}


def parse_cell(raw):
    """Parse one CSV field into ``None``, ``int``, ``float`` or ``str``."""
    if raw is None:
        return None
    if not isinstance(raw, str):
        if isinstance(raw, float) and math.isnan(raw):
            return None
        return raw
    text = raw.strip()
    if text == "":
        return None
    if _INT_RE.match(text):
        return int(text)
    try:
        value = float(text)
    except ValueError:
        return text
    if not math.isfinite(value):
        return text
    return value


def _is_number(cell):
    return isinstance(cell, (int, float)) and not isinstance(cell, bool)


def _is_iso_date(text):
    try:
        datetime.date.fromisoformat(text)
        return True
    except ValueError:
        pass
    try:
        datetime.datetime.fromisoformat(text)
        return True
    except ValueError:
        return False


def _name_tokens(name):
    spaced = re.sub(r"([a-z0-9])([A-Z])", r"\1 \2", name)
    return {tok for tok in re.split(r"[^0-9a-zA-Z]+", spaced.lower()) if tok}


def infer_column_kind(values, name="", ordinal_max_distinct=DEFAULT_ORDINAL_MAX_DISTINCT,
                      temporal_hints=DEFAULT_TEMPORAL_HINTS):
    """Guess the :class:`ColumnKind` of a column from its raw or parsed cells.

    Numbers are Temporal when the column name carries a temporal hint,
    Ordinal when integer-valued with few distinct levels that repeat, and
    Numeric otherwise.  Text is Temporal when every cell is an ISO date,
    Categorical otherwise.  An all-null column is Categorical.
    """
    cells = [parse_cell(v) for v in values]
    cells = [c for c in cells if c is not None]
    if not cells:
        return ColumnKind.CATEGORICAL
    if all(_is_number(c) for c in cells):
        if _name_tokens(name) & {h.lower() for h in temporal_hints}:
            return ColumnKind.TEMPORAL
        distinct = set(cells)
        integral = all(float(c).is_integer() for c in cells)
        if integral and len(distinct) <= ordinal_max_distinct and len(distinct) < len(cells):
            return ColumnKind.ORDINAL
        return ColumnKind.NUMERIC
    if all(isinstance(c, str) and _is_iso_date(c) for c in cells):
        return ColumnKind.TEMPORAL
    return ColumnKind.CATEGORICAL


def _coerce(cells, kind):
    """Normalise parsed cells so every value in a column has one type family."""
    numbers = all(c is None or _is_number(c) for c in cells)
    if numbers and kind is not ColumnKind.CATEGORICAL:
        out = []
        for c in cells:
            if c is None:
                out.append(None)
            elif isinstance(c, float) and c.is_integer() and kind is not ColumnKind.NUMERIC:
                out.append(int(c))
            else:
                out.append(c)
        return tuple(out)
    return tuple(None if c is None else (c if isinstance(c, str) else _format_number(c)) for c in cells)


def _format_number(x):
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return str(x)


def cell_sort_key(cell):
    if _is_number(cell):
        return (0, float(cell), "")
    return (1, 0.0, str(cell))


@dataclass(frozen=True)
class Column:
    name: str
    kind: ColumnKind
    values: tuple
    description: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.values, tuple):
            object.__setattr__(self, "values", tuple(self.values))
        if self.kind is ColumnKind.NUMERIC:
            for v in self.values:
                if v is not None and not (_is_number(v) and math.isfinite(v)):
                    raise FormatError(f"column {self.name!r}: non-numeric cell {v!r}")

    def __len__(self):
        return len(self.values)

    @cached_property
    def is_number_valued(self):
        return all(v is None or _is_number(v) for v in self.values)

    @cached_property
    def levels(self):
        """Distinct non-null values in ascending order."""
        return tuple(sorted({v for v in self.values if v is not None}, key=cell_sort_key))

    @cached_property
    def codes(self):
        """Integer code per row indexing :attr:`levels`; -1 marks null."""
        index = {v: i for i, v in enumerate(self.levels)}
        return np.fromiter((-1 if v is None else index[v] for v in self.values),
                           dtype=np.int64, count=len(self.values))

    @cached_property
    def numeric(self):
        """Float array with NaN for null cells; only valid for number-valued columns."""
        return np.array([np.nan if v is None else float(v) for v in self.values], dtype=float)

    def level_code(self, value):
        try:
            return self._level_index[value]
        except (KeyError, TypeError):
            return -1

    @cached_property
    def _level_index(self):
        return {v: i for i, v in enumerate(self.levels)}


@dataclass(frozen=True)
class Dataset:
    name: str
    columns: tuple
    description: Optional[str] = None
    row_count: int = field(default=-1)

    def __post_init__(self):
        cols = tuple(self.columns)
        object.__setattr__(self, "columns", cols)
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            raise FormatError(f"duplicate column names in {names}")
        n = self.row_count
        if n < 0:
            n = len(cols[0]) if cols else 0
            object.__setattr__(self, "row_count", n)
        for c in cols:
            if len(c) != n:
                raise FormatError(f"column {c.name!r} has {len(c)} values, expected {n}")

    @cached_property
    def _by_name(self):
        return {c.name: c for c in self.columns}

    @property
    def column_names(self):
        return [c.name for c in self.columns]

    def __contains__(self, name):
        return name in self._by_name

    def column(self, name) -> Column:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownColumn(f"unknown column {name!r}") from None

    __getitem__ = column

    def with_metadata(self, name=None, description=None, column_descriptions=None):
        descs = column_descriptions or {}
        cols = tuple(
            Column(c.name, c.kind, c.values, descs.get(c.name, c.description)) for c in self.columns
        )
        return Dataset(name or self.name, cols, description if description is not None else self.description,
                       self.row_count)

    @classmethod
    def from_columns(cls, data, name="dataset", description=None, kinds=None,
                     ordinal_max_distinct=DEFAULT_ORDINAL_MAX_DISTINCT, temporal_hints=DEFAULT_TEMPORAL_HINTS):
        """Build a dataset from a ``{name: values}`` mapping, inferring kinds unless given."""
        kinds = kinds or {}
        columns = []
        for col_name, raw in data.items():
            cells = [parse_cell(v) for v in raw]
            kind = kinds.get(col_name)
            if kind is None:
                kind = infer_column_kind(cells, col_name, ordinal_max_distinct, temporal_hints)
            kind = ColumnKind(kind)
            columns.append(Column(col_name, kind, _coerce(cells, kind)))
        return cls(name, tuple(columns), description)


def load_csv(path, name=None, description=None, ordinal_max_distinct=DEFAULT_ORDINAL_MAX_DISTINCT,
             temporal_hints=DEFAULT_TEMPORAL_HINTS) -> Dataset:
    """Load a comma-separated, UTF-8 CSV file with a header row."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or any(h.strip() == "" for h in rows[0]):
        raise FormatError(f"{path}: missing or empty header")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise FormatError(f"{path}: duplicate header names")
    body = rows[1:]
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
    data = {h: [row[i] for row in body] for i, h in enumerate(header)}
    if name is None:
        name = re.sub(r"\.csv$", "", str(path).replace("\\", "/").rsplit("/", 1)[-1])
    return Dataset.from_columns(data, name=name, description=description,
                                ordinal_max_distinct=ordinal_max_distinct, temporal_hints=temporal_hints)


def load_metadata(path):
    """Read a JSON sidecar ``{"name", "description", "columns": {col: text}}``."""
    with open(path, encoding="utf-8") as fh:
        meta = json.load(fh)
    if not isinstance(meta, dict):
        raise FormatError(f"{path}: metadata must be a JSON object")
    columns = meta.get("columns") or {}
    if not isinstance(columns, dict):
        raise FormatError(f"{path}: 'columns' must map column names to descriptions")
    return {"name": meta.get("name"), "description": meta.get("description"), "columns": columns}


@dataclass(frozen=True)
class Measure:
    agg: Agg
    column: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "agg", Agg(self.agg))
        if self.agg is not Agg.COUNT and not self.column:
            raise IncompatibleMeasure(f"{self.agg.value} needs a column")

    def __str__(self):
        return f"{self.agg.value}({self.column or ''})"

    @classmethod
    def parse(cls, text):
        """Parse ``"mean(Performance)"``, ``"COUNT()"``, ``"count(*)"`` or ``"COUNT"``."""
        text = str(text).strip()
        m = re.fullmatch(r"([A-Za-z]+)\s*(?:\(\s*(.*?)\s*\))?", text)
        if not m:
            raise ValueError(f"cannot parse measure {text!r}")
        agg_name = m.group(1).upper()
        agg = _AGG_ALIASES.get(agg_name)
        if agg is None:
            try:
                agg = Agg(agg_name)
            except ValueError:
                raise ValueError(f"unknown aggregation {m.group(1)!r}") from None
        column = m.group(2)
        if column in ("", "*", None):
            column = None
        elif len(column) >= 2 and column[0] == column[-1] and column[0] in "\"'`":
            column = column[1:-1]
        return cls(agg, column)


class Subspace:
    """A conjunction of ``column = value`` equality filters.

    Filters keep insertion order for display; equality and hashing use the
    canonical form with filters sorted by column name.
    """

    __slots__ = ("filters", "_key")

    def __init__(self, filters=()):
        filters = tuple((str(c), v) for c, v in filters)
        cols = [c for c, _ in filters]
        if len(set(cols)) != len(cols):
            raise ValueError(f"duplicate filter columns in {cols}")
        self.filters = filters
        self._key = json.dumps(sorted([c, v] for c, v in filters), ensure_ascii=False)

    @property
    def key(self):
        return self._key

    @property
    def columns(self):
        return {c for c, _ in self.filters}

    def add(self, column, value):
        return Subspace(self.filters + ((column, value),))

    def __len__(self):
        return len(self.filters)

    def __bool__(self):
        return bool(self.filters)

    def __iter__(self):
        return iter(self.filters)

    def __eq__(self, other):
        return isinstance(other, Subspace) and other._key == self._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Subspace({list(self.filters)!r})"

    def __str__(self):
        if not self.filters:
            return "all rows"
        return " AND ".join(f"{c} = {v}" for c, v in self.filters)

    def to_list(self):
        return [[c, v] for c, v in self.filters]


EMPTY = Subspace()


def subspace_mask(dataset, subspace):
    mask = np.ones(dataset.row_count, dtype=bool)
    for col_name, value in subspace.filters:
        col = dataset.column(col_name)
        code = col.level_code(value)
        if code < 0:
            return np.zeros(dataset.row_count, dtype=bool)
        mask &= col.codes == code
    return mask


def apply_subspace(dataset, subspace):
    """Indices of the rows matching every filter of ``subspace``."""
    return np.flatnonzero(subspace_mask(dataset, subspace))


@dataclass(frozen=True)
class View:
    breakdown: str
    measure: Measure
    groups: tuple
    breakdown_kind: ColumnKind = ColumnKind.CATEGORICAL

    @property
    def keys(self):
        return [k for k, _ in self.groups]

    @property
    def values(self):
        return [v for _, v in self.groups]

    def __len__(self):
        return len(self.groups)

    def to_list(self):
        return [[k, v] for k, v in self.groups]


def check_measure(dataset, breakdown, measure):
    bcol = dataset.column(breakdown)
    if measure.column is not None:
        mcol = dataset.column(measure.column)
        if measure.column == breakdown:
            raise IncompatibleMeasure(f"breakdown {breakdown!r} is also the measure column")
        if measure.agg is not Agg.COUNT and not (
            mcol.kind in (ColumnKind.NUMERIC, ColumnKind.ORDINAL) and mcol.is_number_valued
        ):
            raise IncompatibleMeasure(f"{measure} needs a numeric column, {mcol.name!r} is {mcol.kind.value}")
    return bcol


def compute_view(dataset, subspace, breakdown, measure) -> View:
    """Group the rows selected by ``subspace`` on ``breakdown`` and aggregate ``measure``."""
    bcol = check_measure(dataset, breakdown, measure)
    return _compute_view(dataset, subspace_mask(dataset, subspace), bcol, measure)


def _compute_view(dataset, mask, bcol, measure):
    codes = bcol.codes
    sel = mask & (codes >= 0)
    nlev = len(bcol.levels)
    if measure.agg is Agg.COUNT:
        present = np.bincount(codes[sel], minlength=nlev) > 0
        if measure.column is not None:
            sel = sel & (dataset.column(measure.column).codes >= 0)
        counts = np.bincount(codes[sel], minlength=nlev)
        pairs = [(bcol.levels[i], int(counts[i])) for i in np.flatnonzero(present)]
    else:
        vals = dataset.column(measure.column).numeric
        sel = sel & ~np.isnan(vals)
        g = codes[sel]
        x = vals[sel]
        counts = np.bincount(g, minlength=nlev)
        present = np.flatnonzero(counts)
        if measure.agg in (Agg.SUM, Agg.MEAN):
            sums = np.bincount(g, weights=x, minlength=nlev)
            out = sums if measure.agg is Agg.SUM else sums / np.maximum(counts, 1)
        elif measure.agg is Agg.MIN:
            out = np.full(nlev, np.inf)
            np.minimum.at(out, g, x)
        else:
            out = np.full(nlev, -np.inf)
            np.maximum.at(out, g, x)
        pairs = [(bcol.levels[i], float(out[i])) for i in present]
    if bcol.kind.orderable:
        pairs.sort(key=lambda kv: cell_sort_key(kv[0]))
    else:
        pairs.sort(key=lambda kv: (-kv[1], str(kv[0])))
    return View(bcol.name, measure, tuple(pairs), bcol.kind)
