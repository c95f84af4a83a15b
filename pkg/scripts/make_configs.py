"""Write the shipped example configs under configs/."""

import json
from pathlib import Path

from nvpair.config import Config
from nvpair.experiments import with_overrides

OUT = Path(__file__).resolve().parent.parent / "configs"

VARIANTS = {
    "default": {},
    # NV-N pair far enough apart that the hyperfine side resonances stay resolved
    "weak_coupling": {"geometry": {"r": 5.0}, "field_sweep": {"power_uw": 5.0}},
    # vector close to the NV axis: negative zz coupling, high-frequency dip fades
    "ferro": {"geometry": {"r": 1.64, "theta": 45.0}, "esr_map": {"b_min": 100.0}},
    "noisy_t1": {"pump_probe": {"noise": 0.03}},
}


def main():
    OUT.mkdir(exist_ok=True)
    for name, sections in VARIANTS.items():
        cfg = with_overrides(Config(), **sections)
        (OUT / f"{name}.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
        print(f"wrote {OUT / name}.json")


if __name__ == "__main__":
    main()
