#!/usr/bin/env python3
"""Build the benchmark datasets under data/ in sparse text format.

Ringnorm, Twonorm and Letter come from the KEEL copies shipped in the
`keel-ds` wheel, Hypothyroid from `imbalanced-databases`, Clean2 (Musk v2)
from `mil`. Nursery is regenerated as the full attribute product; its
binary task (not_recom vs. rest) depends on the health attribute only.
The minority class is always written as +1.
"""
import csv
import io
import itertools
import os
import subprocess
import sys
import tempfile
import zipfile

WHEELS = {
    "keel-ds==0.2.5": "keel_ds",
    "imbalanced-databases==0.1.1": "imbalanced_databases",
    "mil==1.0.5": "mil",
}


def fetch(workdir):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", workdir, *WHEELS],
        check=True,
    )
    archives = {}
    for name in os.listdir(workdir):
        for spec, prefix in WHEELS.items():
            if name.startswith(prefix):
                archives[prefix] = zipfile.ZipFile(os.path.join(workdir, name))
    return archives


def read_member(zf, suffix):
    (name,) = [n for n in zf.namelist() if n.endswith(suffix)]
    return zf.read(name).decode("latin-1")


def write_svm(path, rows):
    n_pos = 0
    with open(path, "w") as out:
        for label, feats in rows:
            n_pos += label > 0
            parts = ["+1" if label > 0 else "-1"]
            parts += [f"{i + 1}:{v!r}" for i, v in enumerate(feats) if v != 0.0]
            out.write(" ".join(parts) + "\n")
    print(f"{path}: {len(rows)} rows, {n_pos} positive")


def keel(zf, suffix, positive):
    rows = []
    for line in read_member(zf, suffix).splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        *feats, label = [t.strip() for t in line.split(",")]
        rows.append((1 if label == positive else -1, [float(x) for x in feats]))
    return rows


def hypothyroid(zf):
    text = read_member(zf, "hypothyroid/hypothyroid.data.txt")
    raw = [r for r in csv.reader(io.StringIO(text)) if r]
    # drop TBG and TBG_measured: almost entirely missing
    raw = [r[:-2] for r in raw]
    numeric = {1, 15, 17, 19, 21, 23}
    cols = len(raw[0]) - 1
    means = {}
    for c in numeric:
        vals = [float(r[c]) for r in raw if r[c] != "?"]
        means[c] = sum(vals) / len(vals)
    rows = []
    for r in raw:
        feats = []
        for c in range(1, cols + 1):
            v = r[c]
            if c in numeric:
                feats.append(float(v) if v != "?" else means[c])
            elif c == 2:
                feats.append({"M": 1.0, "F": 0.0}.get(v, 0.5))
            else:
                feats.append(1.0 if v in ("t", "y") else 0.0)
        rows.append((1 if r[0] == "hypothyroid" else -1, feats))
    return rows


def musk2(zf):
    text = read_member(zf, "csv/musk2.csv")
    rows = []
    for r in csv.reader(io.StringIO(text)):
        if r:
            rows.append((1 if r[0] == "1" else -1, [float(x) for x in r[2:]]))
    return rows


def nursery():
    levels = [3, 5, 4, 4, 3, 2, 3, 3]
    rows = []
    for combo in itertools.product(*[range(1, k + 1) for k in levels]):
        health = combo[-1]
        rows.append((1 if health == 3 else -1, [float(x) for x in combo]))
    return rows


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out_dir, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        wheels = fetch(tmp)
        keel_zf = wheels["keel_ds"]
        write_svm(os.path.join(out_dir, "ringnorm.svm"), keel(keel_zf, "raw/ring.dat", "0"))
        write_svm(os.path.join(out_dir, "twonorm.svm"), keel(keel_zf, "raw/twonorm.dat", "1"))
        write_svm(os.path.join(out_dir, "letter.svm"), keel(keel_zf, "raw/letter.dat", "Z"))
        write_svm(os.path.join(out_dir, "hypothyroid.svm"), hypothyroid(wheels["imbalanced_databases"]))
        write_svm(os.path.join(out_dir, "clean2.svm"), musk2(wheels["mil"]))
    write_svm(os.path.join(out_dir, "nursery.svm"), nursery())


if __name__ == "__main__":
    main()
