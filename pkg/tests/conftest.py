# criterion number -> list of (clause, ok, detail), filled by test_acceptance
ACCEPTANCE: dict[int, list] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        clauses = ACCEPTANCE[n]
        status = "PASS" if all(ok for _, ok, _ in clauses) else "FAIL"
        detail = "; ".join(f"{c}: {'ok' if ok else 'FAILED'}" + (f" ({d})" if d else "") for c, ok, d in clauses)
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}")
