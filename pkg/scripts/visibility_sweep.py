"""Exact inequality and CHSH values against Werner visibility, with the critical points."""

import argparse

import numpy as np

from contextuality import experiment
from contextuality.pmsquare import bell_state


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=11)
    args = ap.parse_args()
    s = experiment.optimal_chsh_setting()
    print(f"{'V':>5} {'eq6':>8} {'eq7':>8} {'CHSH':>8}")
    for v in np.linspace(0, 1, args.points):
        rho = experiment.werner_state(v)
        print(f"{v:5.2f} {experiment.exact_value('eq6', v):8.4f} "
              f"{experiment.exact_value('eq7', v):8.4f} {experiment.chsh_value(rho, s):8.4f}")
    for which in ("eq6", "eq7"):
        print(f"critical visibility {which}: {experiment.critical_visibility(which):.10f}")
    print(f"CHSH classical threshold V = {1 / np.sqrt(2):.10f}")
    for key, ref in experiment.REFERENCES.items():
        if "stderr" in ref:
            v = experiment.visibility_for_chsh(ref["value"])
            print(f"{key}: CHSH {ref['value']} -> V = {v:.4f}, eq7 = {experiment.exact_value('eq7', v):.3f}")
    assert abs(experiment.chsh_value(bell_state(), s) - experiment.CHSH_QUANTUM_MAX) < 1e-10


if __name__ == "__main__":
    main()
