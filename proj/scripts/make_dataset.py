#!/usr/bin/env python3
"""Generate the bundled synthetic scenario file.

Three users over 7 representative days of 24 hourly slots:
  u1  commercial load peaking around noon, owns a small wind turbine (stronger at night)
  u2  residential load with morning and evening peaks, rooftop solar
  u3  residential load with a later, sharper evening peak, same solar capacity as u2

Run without arguments to rewrite data/scenarios.csv; with --check to verify the
committed file is byte-identical to a fresh generation and matches the pinned digest.
"""

import argparse
import hashlib
import io
import pathlib
import sys

import numpy as np

SEED = 20190512
SLOTS = 24
DAY_COUNTS = [62, 48, 55, 51, 47, 58, 45]  # days of the year each scenario stands for
PINNED_SHA256 = "531d8a7b5fc619c0570ee8de18d60d645df8fd0dbdd708c942059336d5e831e3"

ROOT = pathlib.Path(__file__).resolve().parent.parent
TARGET = ROOT / "data" / "scenarios.csv"


def bump(hours, centre, width):
    return np.exp(-(((hours - centre) / width) ** 2))


def generate():
    rng = np.random.RandomState(SEED)
    hours = np.arange(SLOTS) + 0.5
    total_days = sum(DAY_COUNTS)
    out = io.StringIO()
    out.write("scenario_id,probability,user_id,slot_index,load_kw,renewable_kw\n")
    for w, days in enumerate(DAY_COUNTS):
        level = 0.8 + 0.4 * rng.rand()
        wind = 0.3 + 1.2 * rng.rand()
        sun = 0.2 + 0.8 * rng.rand()
        profiles = {
            "u1": (
                level * (1.0 + 3.0 * bump(hours, 12.5, 3.0)),
                2.0 * wind * (0.6 + 0.4 * np.cos(2.0 * np.pi * (hours - 2.0) / 24.0)),
            ),
            "u2": (
                level * (0.5 + 1.8 * bump(hours, 7.5, 1.5) + 2.5 * bump(hours, 19.0, 2.0)),
                2.5 * sun * np.clip(np.sin(np.pi * (hours - 6.0) / 12.0), 0.0, None),
            ),
            "u3": (
                level * (0.6 + 1.2 * bump(hours, 8.0, 1.8) + 3.0 * bump(hours, 20.0, 1.7)),
                2.5 * sun * np.clip(np.sin(np.pi * (hours - 6.0) / 12.0), 0.0, None),
            ),
        }
        prob = days / total_days
        for user, (load, ren) in profiles.items():
            load = np.clip(load * (1.0 + 0.1 * rng.randn(SLOTS)), 0.0, None)
            ren = np.clip(ren * (1.0 + 0.15 * rng.randn(SLOTS)), 0.0, None)
            for t in range(SLOTS):
                out.write(f"s{w + 1},{prob:.15g},{user},{t + 1},{load[t]:.3f},{ren[t]:.3f}\n")
    return out.getvalue().encode()


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--check", action="store_true", help="verify instead of writing")
    args = parser.parse_args()
    data = generate()
    digest = hashlib.sha256(data).hexdigest()
    if not args.check:
        TARGET.parent.mkdir(parents=True, exist_ok=True)
        TARGET.write_bytes(data)
        print(f"wrote {TARGET} sha256={digest}")
        return 0
    on_disk = TARGET.read_bytes()
    ok = True
    if on_disk != data:
        print("data/scenarios.csv differs from a fresh generation", file=sys.stderr)
        ok = False
    if hashlib.sha256(on_disk).hexdigest() != PINNED_SHA256:
        print("data/scenarios.csv does not match the pinned digest", file=sys.stderr)
        ok = False
    if ok:
        print(f"dataset ok sha256={digest}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
