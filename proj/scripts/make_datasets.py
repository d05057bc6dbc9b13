"""Regenerate the benchmark CSVs under data/.

Iris and Wine come from scikit-learn's bundled copies. Crabs and Fglass come
from the R MASS package CSV exports (as shipped in the `pydataset` resource
bundle); pass the directory holding crabs.csv and fgl.csv as the first argument.

Crabs: class = species + sex (4 classes), features FL RW CL CW BD.
Fglass: the six glass types are grouped into four classes (WinF, WinNF, Veh,
Other = Con + Tabl + Head).
"""
import csv
import os
import sys

from sklearn import datasets

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "data")


def write(name, header, rows):
    with open(os.path.join(OUT, name), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def from_sklearn(loader, name):
    d = loader()
    cols = [c.replace(" ", "_").replace("/", "_") for c in d.feature_names]
    rows = [[repr(float(v)) for v in x] + [d.target_names[t]] for x, t in zip(d.data, d.target)]
    write(name, cols + ["class"], rows)


def main():
    from_sklearn(datasets.load_iris, "iris.csv")
    from_sklearn(datasets.load_wine, "wine.csv")
    if len(sys.argv) < 2:
        return
    mass = sys.argv[1]
    with open(os.path.join(mass, "crabs.csv")) as f:
        r = list(csv.DictReader(f))
    feats = ["FL", "RW", "CL", "CW", "BD"]
    write("crabs.csv", feats + ["class"], [[x[c] for c in feats] + [x["sp"] + x["sex"]] for x in r])
    with open(os.path.join(mass, "fgl.csv")) as f:
        r = list(csv.DictReader(f))
    feats = ["RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe"]
    group = {"WinF": "WinF", "WinNF": "WinNF", "Veh": "Veh", "Con": "Other", "Tabl": "Other", "Head": "Other"}
    write("fglass.csv", feats + ["class"], [[x[c] for c in feats] + [group[x["type"]]] for x in r])


if __name__ == "__main__":
    main()
