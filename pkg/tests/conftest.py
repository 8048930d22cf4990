import csv

import numpy as np
import pytest

from esgm.panel import ASSET_COLUMNS, CATEGORIES

# Four Real Estate assets with fictitious 2017 category scores. The pillar and
# ESG columns are filled in here for completeness; they are not part of the
# published table.
EXAMPLE2_CATEGORIES = {
    "ABC": (99.3, 50.1, 12.3, 52.2, 0.00, 67.9, 0.00, 11.2, 20.4, 0.00),
    "DEF": (63.5, 70.1, 52.3, 84.3, 10.2, 77.9, 88.9, 55.2, 80.4, 86.3),
    "KLM": (36.3, 0.00, 12.3, 23.2, 0.00, 17.9, 0.00, 21.2, 50.5, 58.3),
    "XYZ": (85.2, 0.00, 12.3, 12.2, 0.00, 54.3, 52.5, 81.2, 75.6, 24.3),
}
EXAMPLE2_PILLARS = {
    "ABC": (53.9, 30.0, 10.5, 31.4),
    "DEF": (62.0, 65.3, 74.0, 68.7),
    "KLM": (16.2, 10.3, 43.3, 25.1),
    "XYZ": (32.5, 29.8, 60.4, 42.0),
}


def example2_rows(year=2017, sector="RealEstate"):
    rows = []
    for asset, cats in EXAMPLE2_CATEGORIES.items():
        rows.append([asset, sector, year, *cats, *EXAMPLE2_PILLARS[asset]])
    return rows


def write_csv(path, rows, header=ASSET_COLUMNS):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def record_row(asset, sector, year, value=50.0, zeros=()):
    cats = [0.0 if c in zeros else value for c in CATEGORIES]
    return [asset, sector, year, *cats, value, value, value, value]


def business_days(year):
    days = np.arange(np.datetime64(f"{year}-01-01"), np.datetime64(f"{year + 1}-01-01"))
    return days[np.is_busday(days)]


@pytest.fixture
def example2_file(tmp_path):
    return write_csv(tmp_path / "assets.csv", example2_rows())


# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(line)
