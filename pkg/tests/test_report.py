import math

from krflow.harness import FAIL, MEASURED, PASS, CheckResult
from krflow.report import MEASURED_COLUMNS, measured_csv, results_from_json, results_to_json, write_report

RESULTS = [
    CheckResult("sandwich", PASS, 1.5, None, {"times": [0.1, 0.2], "lo": [1.0, 1.1]}),
    CheckResult("identities", MEASURED, 3e-4, None, {"residual_phidot": 3e-4}),
    CheckResult("prop1_lower", FAIL, 0.9, (0.25, -1.5), {"message": "x"}),
    CheckResult("degenerate_bounds", FAIL, None, (math.nan, math.nan), {}),
]


def test_json_roundtrip():
    back = results_from_json(results_to_json(RESULTS))
    assert [r.name for r in back] == [r.name for r in RESULTS]
    assert [r.status for r in back] == [r.status for r in RESULTS]
    assert back[2].first_violation == (0.25, -1.5)
    assert back[0].details["times"] == [0.1, 0.2]


def test_measured_csv():
    lines = measured_csv(RESULTS).strip().splitlines()
    assert lines[0] == ",".join(MEASURED_COLUMNS)
    assert len(lines) == 1 + len(RESULTS)
    assert lines[3].startswith("prop1_lower,fail,0.90000000000000002,0.25,-1.5")


def test_report_lists_each_check_once(tmp_path):
    write_report(tmp_path, "demo", "background = flat", RESULTS)
    text = (tmp_path / "report.md").read_text()
    for r in RESULTS:
        assert text.count(f"| {r.name} |") == 1
    assert (tmp_path / "plots" / "check_sandwich.svg").exists()
