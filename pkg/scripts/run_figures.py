#!/usr/bin/env python3
"""Reproduce the four experiment families as CSVs under results/.

Each family sweeps one parameter per the committed recipe config; curve
variants are applied with --set. Expect a few minutes with the default
packet counts.
"""

import pathlib
import sys

from isac_aoi.cli import main

ROOT = pathlib.Path(__file__).resolve().parent.parent
CFG = ROOT / "configs"
OUT = ROOT / "results"

RUNS = [
    ("fig2_rho0dBsm", ["sweep", "--config", str(CFG / "fig2.cfg"),
                       "--variable", "D", "--grid", "50,100,150,200,250,300",
                       "--set", "rho_bar_dbsm=0", "--packets", "1000000"]),
    ("fig2_rho10dBsm", ["sweep", "--config", str(CFG / "fig2.cfg"),
                        "--variable", "D", "--grid", "50,100,150,200,250,300",
                        "--set", "rho_bar_dbsm=10", "--packets", "1000000"]),
    ("fig3_eps1e-3", ["sweep", "--config", str(CFG / "fig3.cfg"),
                      "--variable", "W", "--grid", "12000,16000,20000,25000,30000",
                      "--set", "epsilon=0.001", "--packets", "400000"]),
    ("fig3_eps3e-3", ["sweep", "--config", str(CFG / "fig3.cfg"),
                      "--variable", "W", "--grid", "12000,16000,20000,25000,30000",
                      "--set", "epsilon=0.003", "--packets", "400000"]),
    ("fig4_zeta4ms", ["sweep", "--config", str(CFG / "fig4.cfg"),
                      "--variable", "alpha",
                      "--grid", "0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.5,0.6,0.7,0.8,0.9",
                      "--set", "zeta=4e-3", "--packets", "400000"]),
    ("fig4_zeta8ms", ["sweep", "--config", str(CFG / "fig4.cfg"),
                      "--variable", "alpha",
                      "--grid", "0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.5,0.6,0.7,0.8,0.9",
                      "--set", "zeta=8e-3", "--packets", "400000"]),
    ("fig5_varpi0.25ms", ["sweep", "--config", str(CFG / "fig5.cfg"),
                          "--variable", "zeta", "--grid", "2e-3,3e-3,4e-3,5e-3,6e-3",
                          "--set", "varpi=0.25e-3", "--packets", "400000"]),
    ("fig5_varpi0.5ms", ["sweep", "--config", str(CFG / "fig5.cfg"),
                         "--variable", "zeta", "--grid", "2e-3,3e-3,4e-3,5e-3,6e-3",
                         "--set", "varpi=0.5e-3", "--packets", "400000"]),
    ("fig5_varpi1ms", ["sweep", "--config", str(CFG / "fig5.cfg"),
                       "--variable", "zeta", "--grid", "2e-3,3e-3,4e-3,5e-3,6e-3",
                       "--set", "varpi=1e-3", "--packets", "400000"]),
]


def run() -> int:
    OUT.mkdir(exist_ok=True)
    for name, argv in RUNS:
        out = OUT / f"{name}.csv"
        print(f"== {name} -> {out}")
        code = main(argv + ["--seed", "1", "--out", str(out)])
        if code != 0:
            print(f"FAILED ({code}): {name}", file=sys.stderr)
            return code
    return 0


if __name__ == "__main__":
    raise SystemExit(run())
