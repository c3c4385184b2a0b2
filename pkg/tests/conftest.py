acceptance_log: list[tuple[str, bool, str]] = []


def record_criterion(name: str, ok: bool, detail: str) -> None:
    acceptance_log.append((name, ok, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not acceptance_log:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in acceptance_log:
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  |  {detail}")
