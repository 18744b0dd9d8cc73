import pytest


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    """Print one verdict line per acceptance property."""
    rep = yield
    if rep.when == "call" and item.module.__name__ == "test_acceptance":
        tr = item.config.pluginmanager.get_plugin("terminalreporter")
        if tr is not None:
            status = "PASS" if rep.passed else "FAIL"
            doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
            tr.write_line(f"[{status}] {doc} ({rep.duration:.2f}s)")
    return rep
