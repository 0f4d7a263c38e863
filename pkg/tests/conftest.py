from __future__ import annotations

from collections import OrderedDict

# criterion number -> list of (label, passed, detail); filled by test_acceptance
ACCEPTANCE: "OrderedDict[int, list[tuple[str, bool, str]]]" = OrderedDict()

CRITERIA = {
    1: "semicircle reduction",
    2: "edge identities",
    3: "normalization and second moment",
    4: "energy cross-check",
    5: "variational characterization",
    6: "Stieltjes inversion",
    7: "exact free energy",
    8: "Fekete convergence",
    9: "MCMC moment law and KS",
    10: "gradient oracle",
    11: "affine scaling",
}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, name in CRITERIA.items():
        checks = ACCEPTANCE.get(k)
        if not checks:
            terminalreporter.write_line(f"criterion {k:2d} ({name}): NOT RUN")
            continue
        ok = all(p for _, p, _ in checks)
        detail = "; ".join(f"{label}: {'ok' if p else 'FAIL'} ({d})" for label, p, d in checks)
        terminalreporter.write_line(f"criterion {k:2d} ({name}): {'PASS' if ok else 'FAIL'} - {detail}")
