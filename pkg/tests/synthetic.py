"""Synthetic tables with planted patterns, shared by the test modules."""
import csv

import numpy as np

from insightminer.table import Dataset

REGIONS = ["North", "South", "East", "West"]
PRODUCTS = ["Widget", "Gadget", "Gizmo", "Doohickey", "Sprocket", "Thingamajig"]
CHANNELS = ["Online", "Retail", "Wholesale"]
SEGMENTS = ["Consumer", "Corporate", "Home Office", "Small Business"]
PRIORITIES = ["Low", "Medium", "High"]
STORES = [f"S{i:02d}" for i in range(8)]


def sales_table(n_rows=10_000, seed=0):
    """Twelve-column sales table.

    Planted structure: Sales grows with Year; Profit depends strongly on
    Channel; within Region = West the Widget product dominates Sales.
    """
    rng = np.random.default_rng(seed)
    region = rng.choice(REGIONS, n_rows)
    product = rng.choice(PRODUCTS, n_rows, p=[0.25, 0.2, 0.2, 0.15, 0.1, 0.1])
    channel = rng.choice(CHANNELS, n_rows)
    segment = rng.choice(SEGMENTS, n_rows)
    year = rng.integers(2014, 2024, n_rows)
    quarter = rng.integers(1, 5, n_rows)
    priority = rng.choice(PRIORITIES, n_rows)
    store = rng.choice(STORES, n_rows)
    sales = 100 + 15 * (year - 2014) + rng.normal(0, 20, n_rows)
    sales = np.where((region == "West") & (product == "Widget"), sales * 6, sales)
    units = rng.integers(1, 200, n_rows).astype(float)
    discount = np.round(rng.uniform(0, 0.3, n_rows), 3)
    profit = np.select([channel == "Online", channel == "Retail"], [40.0, 10.0], -5.0) + rng.normal(0, 5, n_rows)
    data = {
        "Region": region.tolist(), "Product": product.tolist(), "Channel": channel.tolist(),
        "Segment": segment.tolist(), "Year": year.tolist(), "Quarter": quarter.tolist(),
        "Priority": priority.tolist(), "Store": store.tolist(), "Sales": np.round(sales, 2).tolist(),
        "Units": (units + 0.5).tolist(), "Discount": discount.tolist(), "Profit": np.round(profit, 2).tolist(),
    }
    return data


def write_csv(path, data):
    names = list(data)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*(data[n] for n in names)):
            w.writerow(["" if v is None else v for v in row])
    return path


def sales_dataset(n_rows=10_000, seed=0):
    return Dataset.from_columns(sales_table(n_rows, seed), name="sales")


def random_search_table(seed, n_rows=None, n_cols=None, max_values=None):
    """Small random table for search oracles: up to 6 categorical filter columns, <= 8 values each."""
    rng = np.random.default_rng(seed)
    n_rows = n_rows or int(rng.integers(60, 500))
    n_cols = n_cols or int(rng.integers(2, 7))
    max_values = max_values or 8
    data = {"B": [f"b{int(v)}" for v in rng.integers(0, 5, n_rows)]}
    data["T"] = [int(v) for v in rng.integers(2000, 2008, n_rows)]
    for j in range(n_cols):
        k = int(rng.integers(2, max_values + 1))
        weights = rng.dirichlet(np.ones(k))
        data[f"F{j}"] = [f"v{int(v)}" for v in rng.choice(k, n_rows, p=weights)]
    data["M"] = np.round(rng.gamma(2.0, 10.0, n_rows), 3).tolist()
    kinds = {"T": "Temporal", "M": "Numeric"}
    return Dataset.from_columns(data, name=f"random{seed}", kinds=kinds)


def skewed_table(n_rows=600, seed=0):
    """Channel mix differs sharply inside Region = West (planted distribution difference)."""
    rng = np.random.default_rng(seed)
    region = rng.choice(["North", "South", "East", "West"], n_rows)
    west = region == "West"
    channel = np.where(west, rng.choice(CHANNELS, n_rows, p=[0.9, 0.05, 0.05]),
                       rng.choice(CHANNELS, n_rows, p=[0.1, 0.45, 0.45]))
    return Dataset.from_columns({"Region": region.tolist(), "Channel": channel.tolist(),
                                 "Amount": np.round(rng.gamma(2.0, 50.0, n_rows), 2).tolist()}, name="orders")
