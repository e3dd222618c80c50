#!/usr/bin/env python3
"""Writes tests/data/captures: jittered captures of two August Lock activities.

Each capture replays a signature's packets from data/signatures/august_lock
with every gap drawn from Normal(mean, stdev) of that interval, plus one NTP
packet that background filtering removes.
"""
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parents[2]
SIGS = ROOT / "data" / "signatures" / "august_lock"
OUT = ROOT / "tests" / "data" / "captures"


def load(name):
    lines = (SIGS / f"{name}.sig").read_text().splitlines()
    n = int(lines[0].split()[-1])
    packets = [line.split()[1:] for line in lines[1 : 1 + n]]
    stats = [tuple(map(float, line.split()[2:4])) for line in lines[1 + n :]]
    return packets, stats


def main():
    rng = random.Random(6)
    OUT.mkdir(parents=True, exist_ok=True)
    for name in ("wifi_unlocking", "bluetooth_unlocking"):
        packets, stats = load(name)
        for seq in range(1, 9):
            t = 5_000_000
            rows = [(t, packets[0])]
            for fields, (mean, stdev) in zip(packets[1:], stats):
                t += max(1, round(rng.gauss(mean, stdev)))
                rows.append((t, fields))
            ntp = (rows[0][0] + 1, ["lock", "time.nist.gov", "123", "UDP", "D2S", "76"])
            rows.insert(1, ntp)
            text = "".join(f"{ts} {' '.join(f)}\n" for ts, f in rows)
            (OUT / f"{name}.{seq}.log").write_text(text)


if __name__ == "__main__":
    main()
