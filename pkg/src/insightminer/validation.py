"""Input validation helpers shared by the estimators and the CLI."""
import math
from os import PathLike

from .exceptions import IncompatibleMeasure, UnknownColumn
from .table import Dataset, check_measure, load_csv


def check_dataset(X, name=None):
    """Coerce ``X`` into a :class:`Dataset`.

    Accepts a Dataset, a CSV path, a pandas DataFrame or a ``{column: values}``
    mapping.  NaN cells become nulls.
    """
    if isinstance(X, Dataset):
        return X
    if isinstance(X, (str, PathLike)):
        return load_csv(X, name=name)
    if hasattr(X, "columns") and hasattr(X, "to_dict"):
        data = {str(c): [_clean(v) for v in X[c].tolist()] for c in X.columns}
        return Dataset.from_columns(data, name=name or getattr(X, "name", None) or "dataframe")
    if isinstance(X, dict):
        return Dataset.from_columns({str(k): list(v) for k, v in X.items()}, name=name or "dataset")
    raise TypeError(f"cannot build a dataset from {type(X).__name__}")


def _clean(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    if hasattr(v, "item"):
        return v.item()
    return v


def check_card(dataset, card):
    """Raise if ``card`` references unknown columns or an incompatible measure."""
    check_measure(dataset, card.breakdown, card.measure)
    return card


def valid_cards(dataset, cards):
    out = []
    for card in cards:
        try:
            out.append(check_card(dataset, card))
        except (UnknownColumn, IncompatibleMeasure):
            continue
    return out
