"""Check every interferometer scheme against its abstract context on the 16 probe states."""

from contextuality import apparatus as ap
from contextuality.pmsquare import CONTEXT_IDS, bell_state, context


def main():
    probes = ap.tomographic_probes()
    ok = True
    for cid in CONTEXT_IDS:
        app = ap.scheme_for_context(cid)
        rep = ap.verify_against_abstract(app, context(cid), probes)
        ok &= rep.passed
        print(f"{cid} {app.name:<18} {rep.criterion:<24} gated {rep.gated_deviation:.1e} "
              f"full joint {rep.max_deviation:.1e} "
              f"{'ok' if rep.passed else 'FAIL'}")
    res = ap.port_distribution(ap.build_scheme_iii("XSYP"), bell_state())
    print("scheme iii (first = XSYP) on the anticorrelated state:")
    for port, p in sorted(res.probabilities.items()):
        if p > 1e-12:
            print(f"  {port}: {p:.4f}")
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
