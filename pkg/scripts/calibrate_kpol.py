"""Find the pumping rate per microwatt that puts the fitted P(550 uW) at a target.

The laser power enters the rate model only through gamma_pol = k_pol * power,
so a single constant pins the operating point. Everything else stays at the
config values.
"""

import argparse

from scipy.optimize import brentq

from nvpair.config import parse_config
from nvpair.experiments import power_sweep, with_overrides


def fitted_p(config, k_pol, power):
    cfg = with_overrides(config, rates={"k_pol": k_pol, "gamma_pol": None})
    return power_sweep(cfg, powers_uw=[power]).y[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--power", type=float, default=550.0)
    ap.add_argument("--target", type=float, default=0.70)
    args = ap.parse_args()
    config = parse_config(args.config)
    k = brentq(lambda k: fitted_p(config, k, args.power) - args.target, 0.1, 10.0, xtol=1e-6)
    print(f"k_pol = {k:.4f} /us/uW  ->  P({args.power:g} uW) = {fitted_p(config, k, args.power):.4f}")


if __name__ == "__main__":
    main()
