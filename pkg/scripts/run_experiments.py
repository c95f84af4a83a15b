"""Run every simulated measurement for one config and write CSVs to an output folder.

    python scripts/run_experiments.py --config configs/default.json --out results/
"""

import argparse
import time
from pathlib import Path

import numpy as np

from nvpair import experiments as ex
from nvpair.config import parse_config
from nvpair.csvio import write_csv, write_table
from nvpair.hamiltonian import level_diagram


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    lc = cfg.levels
    levels = level_diagram(cfg.system_params(), cfg.dipole_geometry(),
                           np.linspace(lc.b_min, lc.b_max, lc.n))
    write_csv(levels, out / "levels.csv")

    fs = ex.field_sweep(cfg)
    write_csv(fs, out / "field_sweep.csv")
    print("field sweep dips (G):", ", ".join(f"{b:.2f}" for b in ex.find_dips(fs, 3)))

    esr = ex.esr_sweep(cfg)
    write_csv(esr, out / "esr.csv")
    P, fit = ex.measure_polarization(esr)
    print(f"ESR at {cfg.esr.B:g} G: lines {fit['c1']:.2f} / {fit['c2']:.2f} MHz, P = {P:.3f}")

    maps = ex.esr_field_map(cfg)
    write_table(out / "esr_map.csv", ["B (G)", "f - f0 (MHz)", "dI_PL (counts/us)"],
                ex.map_rows(maps), {"config": cfg.digest(), "seed": cfg.seed})
    amps = ex.map_dip_amplitudes(maps)
    write_table(out / "esr_map_amplitudes.csv", ["B (G)", "a_lower", "a_upper"], amps,
                {"config": cfg.digest()})

    ps = ex.power_sweep(cfg)
    write_csv(ps, out / "power_sweep.csv")
    for p, pol in zip(ps.x, ps.y):
        print(f"  {p:7.1f} uW  P = {pol:.3f}")

    pp, fit = ex.pump_probe(cfg)
    write_csv(pp, out / "pump_probe.csv")
    print(f"pump-probe T1 = {fit['t1']:.1f} +/- {fit.stderr['t1']:.1f} us")
    print(f"done in {time.perf_counter() - t0:.1f} s, results in {out}/")


if __name__ == "__main__":
    main()
