import pytest

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, title, ok, detail)``."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        lines.append((number, title, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(lines, key=lambda x: x[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {number:>2}. {title}: {detail}")


@pytest.fixture(autouse=True)
def _default_out_dir(tmp_path, monkeypatch):
    # keep commands run without --out from writing into the working tree
    monkeypatch.setenv("RECHARGING_BANDITS_OUT", str(tmp_path / "results"))
