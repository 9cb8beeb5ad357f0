#!/usr/bin/env python3
"""Builds the on-disk datasets under data/ from raw upstream files.

Adult: converts the raw UCI ``adult.data`` file into the a1a svmlight layout
(123 binary indicator features: continuous attributes quantile-binned,
categorical attributes one-hot, missing values left unset). 1605 rows are
drawn at random for ``a1a`` and the remaining 30956 rows form ``a1a.t``.

MNIST: converts a CSV of flattened 28x28 digits (784 pixel columns followed
by the label) into the IDX image/label pair read by the C++ loader.

Usage:
  prepare_data.py adult  <adult.data> <out_dir> [--seed 0]
  prepare_data.py mnist  <digits.csv[.gz]> <out_dir>
"""

import argparse
import gzip
import os
import random
import struct

CATEGORIES = {
    "workclass": ["Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
                  "Local-gov", "State-gov", "Without-pay", "Never-worked"],
    "education": ["Bachelors", "Some-college", "11th", "HS-grad", "Prof-school",
                  "Assoc-acdm", "Assoc-voc", "9th", "7th-8th", "12th", "Masters",
                  "1st-4th", "10th", "Doctorate", "5th-6th", "Preschool"],
    "marital-status": ["Married-civ-spouse", "Divorced", "Never-married",
                       "Separated", "Widowed", "Married-spouse-absent",
                       "Married-AF-spouse"],
    "occupation": ["Tech-support", "Craft-repair", "Other-service", "Sales",
                   "Exec-managerial", "Prof-specialty", "Handlers-cleaners",
                   "Machine-op-inspct", "Adm-clerical", "Farming-fishing",
                   "Transport-moving", "Priv-house-serv", "Protective-serv",
                   "Armed-Forces"],
    "relationship": ["Wife", "Own-child", "Husband", "Not-in-family",
                     "Other-relative", "Unmarried"],
    "race": ["White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other", "Black"],
    "sex": ["Female", "Male"],
    "native-country": ["United-States", "Cambodia", "England", "Puerto-Rico",
                       "Canada", "Germany", "Outlying-US(Guam-USVI-etc)", "India",
                       "Japan", "Greece", "South", "China", "Cuba", "Iran",
                       "Honduras", "Philippines", "Italy", "Poland", "Jamaica",
                       "Vietnam", "Mexico", "Portugal", "Ireland", "France",
                       "Dominican-Republic", "Laos", "Ecuador", "Taiwan", "Haiti",
                       "Columbia", "Hungary", "Guatemala", "Nicaragua", "Scotland",
                       "Thailand", "Yugoslavia", "El-Salvador", "Trinadad&Tobago",
                       "Peru", "Hong", "Holand-Netherlands"],
}

# (column name, number of bins) for continuous attributes; None marks categorical.
COLUMNS = [
    ("age", 5), ("workclass", None), ("fnlwgt", 5), ("education", None),
    ("education-num", 5), ("marital-status", None), ("occupation", None),
    ("relationship", None), ("race", None), ("sex", None),
    ("capital-gain", 2), ("capital-loss", 2), ("hours-per-week", 5),
    ("native-country", None),
]

A1A_TRAIN_ROWS = 1605


def quantile_edges(values, bins):
    if bins == 2:
        # gain/loss columns are mostly zero: split zero from non-zero
        return [0.0]
    ordered = sorted(values)
    return [ordered[(len(ordered) * k) // bins] for k in range(1, bins)]


def bin_index(value, edges):
    for k, edge in enumerate(edges):
        if value <= edge:
            return k
    return len(edges)


def prepare_adult(src, out_dir, seed):
    rows = []
    with open(src) as fh:
        for line in fh:
            parts = [p.strip() for p in line.strip().rstrip(".").split(",")]
            if len(parts) != 15:
                continue
            rows.append(parts)

    edges = {}
    for col, (name, bins) in enumerate(COLUMNS):
        if bins is not None:
            edges[name] = quantile_edges([float(r[col]) for r in rows], bins)

    encoded = []
    for r in rows:
        active = []
        offset = 1
        for col, (name, bins) in enumerate(COLUMNS):
            if bins is not None:
                active.append(offset + bin_index(float(r[col]), edges[name]))
                offset += bins
            else:
                cats = CATEGORIES[name]
                if r[col] in cats:
                    active.append(offset + cats.index(r[col]))
                offset += len(cats)
        assert offset - 1 == 123
        label = "+1" if r[14].startswith(">50K") else "-1"
        encoded.append(label + " " + " ".join(f"{i}:1" for i in active))

    order = list(range(len(encoded)))
    random.Random(seed).shuffle(order)
    train = sorted(order[:A1A_TRAIN_ROWS])
    test = sorted(order[A1A_TRAIN_ROWS:])
    os.makedirs(out_dir, exist_ok=True)
    for name, idx in (("a1a", train), ("a1a.t", test)):
        with open(os.path.join(out_dir, name), "w") as fh:
            for i in idx:
                fh.write(encoded[i] + "\n")
    print(f"adult: {len(train)} train rows, {len(test)} test rows")


def prepare_mnist(src, out_dir):
    opener = gzip.open if src.endswith(".gz") else open
    images, labels = [], []
    with opener(src, "rt") as fh:
        for line in fh:
            vals = [int(float(v)) for v in line.strip().split(",")]
            if len(vals) != 785:
                continue
            images.append(bytes(vals[:784]))
            labels.append(vals[784])
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "images-idx3-ubyte"), "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            fh.write(img)
    with open(os.path.join(out_dir, "labels-idx1-ubyte"), "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, len(labels)))
        fh.write(bytes(labels))
    print(f"mnist: {len(images)} images")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("kind", choices=["adult", "mnist"])
    parser.add_argument("src")
    parser.add_argument("out_dir")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if args.kind == "adult":
        prepare_adult(args.src, args.out_dir, args.seed)
    else:
        prepare_mnist(args.src, args.out_dir)


if __name__ == "__main__":
    main()
