#!/usr/bin/env python3
"""Regenerate the seven-vehicle example data files under data/."""

import csv
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from crossflow.presets import example1_arrivals, example1_scenario
from crossflow.scenario import dump_scenario

ROOT = pathlib.Path(__file__).resolve().parents[1]


def main():
    data = ROOT / "data"
    data.mkdir(exist_ok=True)
    (data / "example1_scenario.yaml").write_text(dump_scenario(example1_scenario()))
    with open(data / "example1_arrivals.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "lane", "t_in"])
        for rec in example1_arrivals():
            writer.writerow([rec.id, rec.movement, rec.entry_time])
    print("wrote", data / "example1_scenario.yaml")
    print("wrote", data / "example1_arrivals.csv")


if __name__ == "__main__":
    main()
