import csv
import io
import json

import pytest

from rsclass import cli


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_classgroup_json(capsys):
    code, out, _ = run(["classgroup", "--disc", "-23,-12", "--format", "json"], capsys)
    data = json.loads(out)
    assert code == cli.EXIT_OK
    assert data[0]["D"] == -23 and data[0]["h"] == 3
    assert "error" in data[1]


def test_classgroup_range_csv(capsys):
    code, out, _ = run(["classgroup", "--disc-range", "-20:-3"], capsys)
    got = {int(r["D"]): int(r["h"]) for r in rows(out)}
    assert got == {-3: 1, -4: 1, -7: 1, -8: 1, -11: 1, -15: 2, -19: 1, -20: 2}


def test_scan_skips_inadmissible(capsys, trace_cache):
    code, out, err = run(["scan", "--disc", "-4,-23", "--cache", str(trace_cache)], capsys)
    assert code == cli.EXIT_OK
    r = rows(out)
    assert [x["D"] for x in r] == ["-4", "-23"]
    assert r[0]["error"] == "" and "admissible" in r[1]["error"]
    assert "# D=-23: skipped" in err


def test_scan_forced(capsys, trace_cache):
    code, out, err = run(["average", "--disc", "-23", "--force", "--cache", str(trace_cache)], capsys)
    assert code == cli.EXIT_OK
    assert "forced (sign +1)" in err
    r = rows(out)[0]
    assert abs(float(r["S_direct"]) - float(r["S_geometric"])) < 1e-8


def test_scan_fails_on_short_cutoff(capsys, trace_cache):
    code, out, _ = run(["scan", "--disc", "-47", "--cutoff-mult", "2", "--cache", str(trace_cache)], capsys)
    assert code == cli.EXIT_FAILED
    assert "cutoff_mult" in rows(out)[0]["error"]


def test_scan_json_and_out_file(capsys, tmp_path, trace_cache):
    dest = tmp_path / "scan.json"
    code, out, _ = run(["scan", "--disc", "-4", "--format", "json", "--out", str(dest),
                        "--cache", str(trace_cache)], capsys)
    assert code == cli.EXIT_OK and out == ""
    data = json.loads(dest.read_text())
    assert data[0]["D"] == -4 and data[0]["identities_ok"] is True


def test_config_file(capsys, tmp_path, trace_cache):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"disc": "-23", "force": True, "cache": str(trace_cache)}))
    code, out, _ = run(["scan", "--config", str(cfg)], capsys)
    assert code == cli.EXIT_OK
    assert rows(out)[0]["h"] == "3"


def test_config_flags_win(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"disc": "-23"}))
    code, out, _ = run(["classgroup", "--config", str(cfg), "--disc", "-4"], capsys)
    assert [r["D"] for r in rows(out)] == ["-4"]


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(SystemExit):
        cli.main(["classgroup", "--config", str(cfg)])


def test_kernels_rows(capsys):
    code, out, _ = run(["kernels", "--x", "1e-5", "1", "1e6"], capsys)
    r = rows(out)
    assert code == cli.EXIT_OK and len(r) == 3
    assert list(r[0]) == ["x", "V", "W", "log_law"]
    assert abs(float(r[2]["V"])) < 1e-30
    assert float(r[0]["V"]) == pytest.approx(float(r[0]["log_law"]), abs=1e-3)


def test_kernels_range(capsys):
    code, out, _ = run(["kernels", "--x-range", "0.1:10:5"], capsys)
    assert len(rows(out)) == 5


def test_series_rows(capsys, trace_cache):
    code, out, _ = run(["series", "--curve", "11a", "--a", "1", "--b-range", "1:4", "--s", "2",
                        "--radius", "50", "--cache", str(trace_cache)], capsys)
    r = rows(out)
    assert code == cli.EXIT_OK
    assert [x["b"] for x in r] == ["1", "2", "3", "4"]
    assert all(x["error"] == "" for x in r)
    assert all(float(x["tail_bound"]) > 0 for x in r)


def test_series_reports_bad_polynomial(capsys, trace_cache):
    code, out, _ = run(["series", "--a", "4", "--b-range", "4:5", "--radius", "20",
                        "--cache", str(trace_cache)], capsys)
    r = rows(out)
    assert code == cli.EXIT_FAILED
    assert "positive definite" in r[0]["error"] and r[1]["error"] == ""


def test_bad_flags_rejected():
    for argv in (["scan", "--jobs", "0"], ["scan", "--cutoff-mult", "100"], ["kernels", "--kernel-T", "-1"]):
        with pytest.raises(SystemExit):
            cli.main(argv)


def test_negative_values_glued():
    assert cli._glue_negative_values(["--disc", "-4,-7", "--x", "-1"]) == ["--disc=-4,-7", "--x", "-1"]
