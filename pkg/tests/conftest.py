import pytest

from xducer.fields import gaussian_volume, write_volume_file

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda k: int(k.split(".")[0])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture(scope="session")
def million_sample_file(tmp_path_factory):
    """10^6-row volume file with smooth Gaussian fields (100^3 grid)."""
    path = tmp_path_factory.mktemp("fields") / "gauss_1e6.dat"
    write_volume_file(path, gaussian_volume(100, half=1.0, sigma=1.0))
    return path
