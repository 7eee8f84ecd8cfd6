"""Fetch the four public benchmark datasets and write them as package CSVs.

The files bundled under src/fdrbench/data/ are small synthetic stand-ins with
matching schemas so the test suite runs offline. This script replaces them
with subsamples of the actual public datasets, pulled from OpenML:

    python3 scripts/fetch_datasets.py --out src/fdrbench/data --rows 20000

Requires network access and pandas (`pip install pandas`); it is NOT needed
to run the test suite. Output columns and label conventions match
fdrbench.datagen.bundled_dataset_spec: shuttle labels 1-7 in column 'class'
(1 = nominal), creditcard 0/1 in 'Class' (0 = genuine), kddcup99 traffic
names in 'label' ('normal' = nominal, trailing dots stripped), mammography
-1/1 in 'class' (-1 = normal).
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

try:
    import pandas as pd
except ImportError:  # pragma: no cover - utility script only
    raise SystemExit("this script needs pandas: pip install pandas")

from sklearn.datasets import fetch_openml

# dataset -> (openml data_id, label column we write, transform of raw labels)
SOURCES = {
    "shuttle": (40685, "class", lambda s: s.astype(str)),
    "creditcard": (1597, "Class", lambda s: s.astype(str).str.strip("'")),
    "kddcup99": (1113, "label", lambda s: s.astype(str).str.rstrip(".")),
    "mammography": (310, "class", lambda s: s.astype(str).str.strip("'")),
}


def subsample(frame: pd.DataFrame, label: str, null_value: str, rows: int, seed: int):
    """Keep every minority-class row, fill the rest with majority rows."""
    rng = np.random.default_rng(seed)
    is_null = frame[label].astype(str) == null_value
    novel = frame[~is_null]
    budget = max(rows - len(novel), 0)
    nulls = frame[is_null]
    if len(nulls) > budget:
        keep = rng.choice(len(nulls), size=budget, replace=False)
        nulls = nulls.iloc[np.sort(keep)]
    out = pd.concat([nulls, novel])
    return out.iloc[rng.permutation(len(out))]


NULL_VALUES = {"shuttle": "1", "creditcard": "0", "kddcup99": "normal", "mammography": "-1"}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("src/fdrbench/data"))
    parser.add_argument("--rows", type=int, default=20_000, help="row cap per dataset")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--only", choices=sorted(SOURCES), help="fetch a single dataset")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for name, (data_id, label, fix) in SOURCES.items():
        if args.only and name != args.only:
            continue
        print(f"fetching {name} (openml id {data_id}) ...")
        bunch = fetch_openml(data_id=data_id, as_frame=True, parser="auto")
        frame = bunch.frame.copy()
        target = bunch.target_names[0]
        frame[target] = fix(frame[target])
        frame = frame.rename(columns={target: label})
        # Keep numeric features only; the loader parses every cell as float.
        numeric = frame.drop(columns=[label]).select_dtypes(include="number")
        frame = pd.concat([numeric, frame[label]], axis=1).dropna()
        frame = subsample(frame, label, NULL_VALUES[name], args.rows, args.seed)
        path = args.out / f"{name}.csv"
        frame.to_csv(path, index=False)
        print(f"  wrote {path} ({path.stat().st_size / 1024:.0f} KiB, {len(frame)} rows)")


if __name__ == "__main__":
    main()
