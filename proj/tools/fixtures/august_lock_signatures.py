#!/usr/bin/env python3
"""Writes the August Lock signature fixtures (data/signatures/august_lock).

Relative timestamps and lengths are the known August Lock signatures.
Interval standard deviations are not known; they are set to 0.2 ms + 0.5% of
the interval.
"""
import pathlib
import sys

SERVER = "rbs.august.com"
D2S, S2D = "D2S", "S2D"

SIGNATURES = {
    "app_opening": [
        (0.000, D2S, 637), (0.132, D2S, 221), (0.204, S2D, 237), (0.209, D2S, 637),
        (0.327, D2S, 237), (0.526, S2D, 237), (0.602, D2S, 637), (0.723, D2S, 237),
        (0.823, S2D, 237), (1.116, D2S, 637), (1.205, D2S, 221), (1.251, S2D, 237),
    ],
    "manual_unlocking": [
        (0.000, D2S, 637), (0.088, D2S, 205), (0.134, S2D, 237), (0.441, D2S, 637),
        (0.526, D2S, 221), (0.571, S2D, 237), (0.581, D2S, 637), (0.666, D2S, 237),
        (0.712, S2D, 237), (0.870, D2S, 637), (0.954, D2S, 237), (1.001, S2D, 237),
        (1.078, D2S, 637), (1.169, D2S, 221), (1.214, S2D, 237), (1.321, D2S, 637),
        (1.410, D2S, 221), (1.473, S2D, 237), (1.559, D2S, 637), (1.659, D2S, 221),
        (1.707, S2D, 237),
    ],
    "autolocking": [
        (0.000, D2S, 637), (0.086, D2S, 221), (0.129, S2D, 237), (0.240, D2S, 637),
        (0.329, D2S, 221), (0.373, S2D, 237), (0.990, D2S, 637), (1.084, D2S, 221),
        (1.127, S2D, 237), (1.277, D2S, 637), (1.366, D2S, 221), (1.410, S2D, 237),
        (1.549, D2S, 637), (1.640, D2S, 221), (1.679, S2D, 237),
    ],
    "wifi_unlocking": [
        (0.000, S2D, 413), (0.008, D2S, 605), (0.254, S2D, 413), (0.262, D2S, 605),
        (1.426, S2D, 413), (1.433, D2S, 605), (1.670, S2D, 413), (1.678, D2S, 605),
    ],
    "bluetooth_unlocking": [
        (0.000, S2D, 413), (0.016, D2S, 605), (1.083, S2D, 413), (1.098, D2S, 605),
        (1.379, S2D, 413), (1.395, D2S, 605),
    ],
}


def render(name, packets):
    times = [round(t * 1_000_000) for t, _, _ in packets]
    lines = [f"# signature lock {name} {len(packets)}"]
    for t, (_, direction, length) in zip(times, packets):
        lines.append(f"{t} lock {SERVER} 443 TCP {direction} {length}")
    for j in range(1, len(times)):
        tau = times[j] - times[j - 1]
        sigma = 200.0 + 0.005 * tau
        lines.append(f"interval {j} {tau:.3f} {sigma:.3f} 100")
    return "\n".join(lines) + "\n"


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/signatures/august_lock")
    out.mkdir(parents=True, exist_ok=True)
    for name, packets in SIGNATURES.items():
        (out / f"{name}.sig").write_text(render(name, packets))


if __name__ == "__main__":
    main()
