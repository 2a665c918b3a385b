def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT, report_line
    except ImportError:
        return
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(REPORT, key=lambda k: int(k.split()[1])):
        terminalreporter.write_line(report_line(key))
