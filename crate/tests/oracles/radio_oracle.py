"""High-precision reference values for the link-budget formulas.

Writes crates/core/tests/data/radio_oracle.csv with 1000 seeded parameter
draws and the path loss, noise floor, received power and capacity computed
with mpmath at 50 significant digits.
"""
import csv
import random
from pathlib import Path

from mpmath import mp, mpf, log10, log, power

mp.dps = 50
OUT = Path(__file__).resolve().parents[2] / "crates/core/tests/data/radio_oracle.csv"
MAX_SE = mpf("7.4")


def draw(rng):
    return {
        "pl0_db": rng.uniform(20.0, 80.0),
        "d0_m": rng.uniform(0.5, 10.0),
        "exponent_n": rng.uniform(1.5, 5.0),
        "d_m": rng.choice([rng.uniform(0.01, 10.0), rng.uniform(1.0, 20000.0)]),
        "tx_power_dbm": rng.uniform(-10.0, 50.0),
        "tx_antenna_gain_db": rng.uniform(0.0, 25.0),
        "rx_antenna_gain_db": rng.uniform(0.0, 25.0),
        "bandwidth_hz": 10 ** rng.uniform(5.0, 9.0),
        "noise_figure_db": rng.uniform(0.0, 15.0),
    }


def evaluate(p):
    v = {k: mpf(repr(x)) for k, x in p.items()}
    d = max(v["d_m"], v["d0_m"])
    pl = v["pl0_db"] + 10 * v["exponent_n"] * log10(d / v["d0_m"])
    noise = mpf(-174) + 10 * log10(v["bandwidth_hz"]) + v["noise_figure_db"]
    rx = v["tx_power_dbm"] + v["tx_antenna_gain_db"] + v["rx_antenna_gain_db"] - pl
    snr_db = rx - noise
    se = log(1 + power(10, snr_db / 10)) / log(2)
    cap = v["bandwidth_hz"] * se
    capped = v["bandwidth_hz"] * min(se, MAX_SE)
    return pl, noise, rx, snr_db, cap, capped


def main():
    rng = random.Random(20260101)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="") as f:
        w = csv.writer(f)
        keys = list(draw(random.Random(0)).keys())
        w.writerow(keys + ["path_loss_db", "noise_floor_dbm", "rx_dbm", "snr_db", "capacity_bps", "capacity_capped_bps"])
        for _ in range(1000):
            p = draw(rng)
            outs = evaluate(p)
            w.writerow([repr(p[k]) for k in keys] + [mp.nstr(x, 25) for x in outs])


if __name__ == "__main__":
    main()
