import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# (criterion, ok, detail) records filled in by test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []
# outcomes of the per-module property suites, keyed by test id
_PROPERTY_OUTCOMES: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if _PROPERTY_OUTCOMES.get(report.nodeid) != "failed":
            _PROPERTY_OUTCOMES[report.nodeid] = report.outcome


def _property_record():
    if not _PROPERTY_OUTCOMES:
        return None
    failed = sorted(k for k, v in _PROPERTY_OUTCOMES.items() if v == "failed")
    passed = sum(v == "passed" for v in _PROPERTY_OUTCOMES.values())
    detail = f"{passed} module property tests passed, {len(failed)} failed"
    return "7", not failed, detail + "".join(f"\n      failed: {f}" for f in failed)


def pytest_terminal_summary(terminalreporter):
    records = list(ACCEPTANCE_RESULTS)
    prop = _property_record()
    if prop:
        records.append(prop)
    if not records:
        return
    terminalreporter.section("acceptance criteria")
    order = sorted({r[0] for r in records}, key=lambda c: (not c[0].isdigit(), c))
    for crit in order:
        group = [r for r in records if r[0] == crit]
        status = "PASS" if all(ok for _, ok, _ in group) else "FAIL"
        name = f"criterion {crit}" if crit[0].isdigit() else crit
        terminalreporter.write_line(f"{name}: {status}")
        for _, ok, detail in group:
            terminalreporter.write_line(f"    [{'ok' if ok else 'FAILED'}] {detail}")
    if prop is None:
        terminalreporter.write_line("criterion 7: NOT RUN (run the full suite to evaluate the property suites)")
