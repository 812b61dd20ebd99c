"""Write the datasets that are not bundled as CSV files under $SC_DATA_DIR.

digits and diabetes ship inside scikit-learn; covtype and california_housing
are downloaded by scikit-learn on first use and need network access.

    SC_DATA_DIR=~/sc-data python scripts/fetch_datasets.py digits covtype
"""
import argparse
import os
from pathlib import Path

from sklearn import datasets

from schmidt_circuits.dataio import DATA_DIR_ENV, write_csv

LOADERS = {
    "digits": datasets.load_digits,
    "diabetes": datasets.load_diabetes,
    "covtype": datasets.fetch_covtype,
    "california_housing": datasets.fetch_california_housing,
}


def fetch(name: str, out_dir: Path) -> Path:
    bunch = LOADERS[name]()
    names = getattr(bunch, "feature_names", None)
    target = bunch.target
    if name == "covtype":
        target = target - 1  # classes 1..7 -> 0..6
    path = out_dir / f"{name}.csv"
    write_csv(path, bunch.data, target, list(names) if names is not None else None)
    return path


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="+", choices=sorted(LOADERS))
    parser.add_argument("--out", default=os.environ.get(DATA_DIR_ENV, "data"))
    args = parser.parse_args()
    out = Path(args.out)
    for name in args.names:
        print("wrote", fetch(name, out))


if __name__ == "__main__":
    main()
