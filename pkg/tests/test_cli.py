import io
import json
import math

import pytest

from nonsteer.cli import data_rows, parse_table, render_table, run


def _run(argv):
    buf = io.StringIO()
    code = run(argv, stdout=buf)
    return code, buf.getvalue()


def test_tstate_isotropic():
    code, out = _run(["boundary", "tstate", "--isotropic"])
    assert code == 0
    rec = parse_table(out).records()[0]
    assert abs(rec["mu"] - 0.5) < 1e-8


def test_displaced_werner_zero():
    code, out = _run(["boundary", "displaced-werner", "--a", "0", "--format", "json"])
    assert code == 0
    assert json.loads(out)["rows"][0]["xi"] == 0.5


def test_mapped_reports_minimiser():
    code, out = _run(["boundary", "mapped", "--a", "0.1", "--alpha", "2.0", "--beta", str(math.pi / 4)])
    rec = parse_table(out).records()[0]
    assert code == 0 and rec["converged"] == 1
    assert math.isclose(math.sin(rec["u_star"]) * math.sin(rec["v_star"]), 0.1, rel_tol=1e-12)


def test_degenerate_audit_json():
    code, out = _run(["boundary", "degenerate-t", "--a", "0.1", "--n-alpha", "4", "--order", "32",
                      "--format", "json"])
    obj = json.loads(out)
    assert code == 0
    assert obj["metadata"]["report"]["printed_branch_domain_errors"] == 4
    assert len(obj["rows"]) == 4


def test_classify_inline_and_file(tmp_path):
    code, out = _run(["classify", "--t1", "-0.45", "--t2", "-0.45", "--t3", "-0.45", "--order", "32",
                      "--hull-rays", "16"])
    assert code == 0
    assert parse_table(out).records()[0]["label"] == "nonsteerable_bowles"
    path = tmp_path / "state.json"
    path.write_text(json.dumps({"t11": -0.3, "t22": -0.3, "t33": -0.3}))
    code, out = _run(["classify", "--state-file", str(path), "--order", "32", "--hull-rays", "16"])
    assert code == 0
    assert parse_table(out).records()[0]["label"] == "separable"


def test_channel_commands():
    code, out = _run(["channel", "check", "--u", "0.4", "--v", "1.1"])
    assert code == 0 and parse_table(out).records()[0]["cptp"] == 1
    code, out = _run(["channel", "kraus", "--u", "0.4", "--v", "1.1", "--perm", "2,0,1"])
    assert code == 0 and len(parse_table(out).rows) == 2
    code, out = _run(["channel", "apply", "--u", "0.4", "--v", "1.1", "--t1", "-0.5", "--t2", "-0.5",
                      "--t3", "-0.5"])
    rec = parse_table(out).records()[0]
    assert code == 0 and math.isclose(rec["az"], math.sin(0.4) * math.sin(1.1))


def test_invalid_inputs_exit_2(capsys):
    assert _run(["boundary", "mapped", "--a", "1.2", "--isotropic"])[0] == 2
    assert _run(["channel", "check", "--u", "0", "--v", "0", "--perm", "0,0,1"])[0] == 2
    assert _run(["figure", "fig3a", "--resolution", "3"])[0] == 2
    assert _run(["bogus"])[0] == 2
    assert _run(["boundary", "tstate", "--no-such-flag"])[0] == 2
    assert "usage" in capsys.readouterr().err


def test_csv_round_trip_bit_exact():
    code, out = _run(["figure", "fig3b", "--resolution", "16", "--order", "32"])
    assert code == 0
    tab = parse_table(out)
    assert render_table(tab, "csv") == out
    again = parse_table(render_table(tab, "json"), "json")
    assert again.rows == tab.rows


def test_json_round_trip_bit_exact():
    code, out = _run(["figure", "fig2", "--resolution", "16", "--order", "32", "--format", "json"])
    tab = parse_table(out, "json")
    assert parse_table(render_table(tab, "json"), "json").rows == tab.rows
    csv_back = parse_table(render_table(tab, "csv"))
    assert [r[:-1] for r in csv_back.rows] == [r[:-1] for r in tab.rows]


def test_out_file(tmp_path):
    path = tmp_path / "fig.csv"
    code, out = _run(["figure", "fig3a", "--resolution", "16", "--order", "32", "--out", str(path)])
    assert code == 0 and out == ""
    assert parse_table(path.read_text()).metadata["a"] == 0.1


def test_determinism():
    argv = ["figure", "fig3a", "--resolution", "16", "--order", "32"]
    assert data_rows(_run(argv)[1]) == data_rows(_run(argv)[1])


def test_selftest_passes():
    code, out = _run(["selftest"])
    assert code == 0
    assert all(rec["result"] == "PASS" for rec in parse_table(out).records())
