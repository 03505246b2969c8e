#!/usr/bin/env python3
"""Build data/adult.csv and data/adult.schema from the raw UCI adult files.

Usage: prepare_adult.py RAW_DIR [OUT_DIR]

RAW_DIR holds adult.data and adult.test as distributed by UCI. Rows with a
missing value ("?") are dropped and the train and test files are pooled,
which leaves 45222 rows. The label suffix "." used in adult.test is removed.
"""
import csv
import sys
from pathlib import Path

COLUMNS = [
    ("age", "continuous"),
    ("workclass", "categorical"),
    ("fnlwgt", "continuous"),
    ("education", "categorical"),
    ("education-num", "continuous"),
    ("marital-status", "categorical"),
    ("occupation", "categorical"),
    ("relationship", "categorical"),
    ("race", "categorical"),
    ("sex", "categorical"),
    ("capital-gain", "continuous"),
    ("capital-loss", "continuous"),
    ("hours-per-week", "continuous"),
    ("native-country", "categorical"),
]
TARGET = "income"
CLASSES = ["<=50K", ">50K"]


def read_rows(path):
    rows = []
    with open(path, newline="") as f:
        for record in csv.reader(f, skipinitialspace=True):
            if len(record) != len(COLUMNS) + 1:
                continue  # blank lines and the header line of adult.test
            record = [v.strip() for v in record]
            record[-1] = record[-1].rstrip(".")
            if "?" in record:
                continue
            rows.append(record)
    return rows


def main():
    if len(sys.argv) not in (2, 3):
        sys.exit(__doc__)
    raw = Path(sys.argv[1])
    out = Path(sys.argv[2]) if len(sys.argv) == 3 else Path(__file__).resolve().parent.parent / "data"
    rows = read_rows(raw / "adult.data") + read_rows(raw / "adult.test")
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "adult.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([name for name, _ in COLUMNS] + [TARGET])
        w.writerows(rows)

    lines = ["# UCI adult census, rows with missing values removed", f"target = {TARGET}",
             "classes = " + " | ".join(CLASSES)]
    for i, (name, kind) in enumerate(COLUMNS):
        if kind == "continuous":
            lines.append(f"feature {name} = continuous")
        else:
            cats = sorted({r[i] for r in rows})
            lines.append(f"feature {name} = categorical " + " | ".join(cats))
    (out / "adult.schema").write_text("\n".join(lines) + "\n")
    print(f"wrote {len(rows)} rows to {out / 'adult.csv'}")


if __name__ == "__main__":
    main()
