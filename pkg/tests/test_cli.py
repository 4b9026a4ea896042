import csv
import json
import subprocess
import sys

import pytest

from conftest import small_scenario
from hitlist6.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def ok(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out) if out.strip() else None


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "scenario.json").write_text(json.dumps(small_scenario()))
    assert main(["synth", str(d / "scenario.json"), "--out-dir", str(d / "in")]) == 0
    return d


def test_synth_writes_inputs(synth_dir):
    for name in ("observations.csv", "asn.txt", "country.csv", "aliases.txt", "aliased_truth.txt", "oui.csv",
                 "geo.csv", "grid.csv", "truth.json"):
        assert (synth_dir / "in" / name).exists()


def test_synth_seed_override(synth_dir, tmp_path, capsys):
    a = ok(capsys, "synth", synth_dir / "scenario.json", "--out-dir", tmp_path / "a", "--seed", 99)
    b = ok(capsys, "synth", synth_dir / "scenario.json", "--out-dir", tmp_path / "b")
    assert (tmp_path / "a" / "observations.csv").read_bytes() != (tmp_path / "b" / "observations.csv").read_bytes()
    assert (tmp_path / "b" / "observations.csv").read_bytes() == (synth_dir / "in" / "observations.csv").read_bytes()
    assert a["observations"] > 0 and b["observations"] > 0


def test_store_commands(synth_dir, tmp_path, capsys):
    d = synth_dir / "in"
    truth = json.loads((d / "truth.json").read_text())
    st = tmp_path / "store"
    c = ok(capsys, "ingest", d / "observations.csv", "--store", st, "--asn", d / "asn.txt",
           "--country", d / "country.csv", "--chunk-size", 64)
    assert c["unique_addresses"] == truth["unique_addresses"]
    assert c["ingest"]["runs"] > 1

    s = ok(capsys, "summarize", "--store", st, "--asn", d / "asn.txt", "--compare", f"self={d / 'observations.csv'}",
           "--csv", tmp_path / "sum.csv")
    assert s["comparisons"]["self"]["common_addresses"] == truth["unique_addresses"]
    assert (tmp_path / "sum.csv").exists()

    cl = ok(capsys, "classify", "--store", st, "--asn", d / "asn.txt", "--out-dir", tmp_path / "cls")
    assert cl["addresses"] == truth["unique_addresses"]
    assert (tmp_path / "cls" / "categories.csv").exists()

    e = ok(capsys, "eui64", "--store", st, "--oui", d / "oui.csv", "--out", tmp_path / "macs.csv")
    assert e["unique_macs"] == len(truth["mac_track_class"])

    r = ok(capsys, "release", "--store", st, "--out", tmp_path / "rel.txt")
    assert r["slash48s"] == len((tmp_path / "rel.txt").read_text().splitlines())

    # geolink from the MAC report
    ok(capsys, "geolink", "tally", "--macs", tmp_path / "macs.csv", "--geo", d / "geo.csv",
       "--out", tmp_path / "tally.csv", "--top", 3)
    assert next(csv.DictReader(open(tmp_path / "tally.csv")))
    models = ok(capsys, "geolink", "infer", "--macs", tmp_path / "macs.csv", "--geo", d / "geo.csv",
                "--out", tmp_path / "models.csv")
    assert models == truth["oui_offsets"]
    placed = ok(capsys, "geolink", "apply", "--store", st, "--geo", d / "geo.csv", "--models", tmp_path / "models.csv",
                "--grid", d / "grid.csv", "--out", tmp_path / "geo_results.csv")
    assert placed["geolocated"] == len(truth["geolocated"])
    too_strict = ok(capsys, "geolink", "infer", "--store", st, "--geo", d / "geo.csv", "--out", tmp_path / "m2.csv",
                    "--min-pairs", 10 ** 9)
    assert too_strict == {}


def test_track(synth_dir, tmp_path, capsys):
    d = synth_dir / "in"
    truth = json.loads((d / "truth.json").read_text())
    counts = ok(capsys, "track", d / "observations.csv", "--asn", d / "asn.txt", "--country", d / "country.csv",
                "--out", tmp_path / "t.csv", "--lifetime-ccdf", tmp_path / "lt.csv", "--lifetime-key", "mac")
    expect = {}
    for cls in truth["mac_track_class"].values():
        expect[cls] = expect.get(cls, 0) + 1
    assert {k: v for k, v in counts.items() if v} == expect
    assert (tmp_path / "lt.csv").read_text().startswith("x,ccdf")


def test_alias_commands(synth_dir, tmp_path, capsys):
    d = synth_dir / "in"
    truth = json.loads((d / "truth.json").read_text())
    plan = ok(capsys, "alias", "plan", d / "observations.csv", "--out-dir", tmp_path / "bs", "--seed", 7)
    assert plan["intervals"] == len(list((tmp_path / "bs").glob("plan_*.csv")))
    ok(capsys, "alias", "respond", "--plans-dir", tmp_path / "bs", "--aliased", d / "aliased_truth.txt",
       "--client-rate", 0, "--out-dir", tmp_path / "bs")
    inf = ok(capsys, "alias", "infer", "--plans-dir", tmp_path / "bs", "--responses-dir", tmp_path / "bs",
             "--out", tmp_path / "v.csv", "--summary", tmp_path / "s.json")
    assert inf["aliased_64_count"] == len(truth["aliased_64s"])
    cmp = ok(capsys, "alias", "compare", tmp_path / "v.csv", "--aliases", d / "aliases.txt",
             "--new-out", tmp_path / "new.txt")
    assert cmp == {"known": len(truth["published_aliased_64s"]),
                   "new": len(truth["aliased_64s"]) - len(truth["published_aliased_64s"])}
    assert len((tmp_path / "new.txt").read_text().splitlines()) == cmp["new"]


def test_plan_seed_changes_targets(synth_dir, tmp_path, capsys):
    d = synth_dir / "in"
    ok(capsys, "alias", "plan", d / "observations.csv", "--out-dir", tmp_path / "a", "--seed", 1)
    ok(capsys, "alias", "plan", d / "observations.csv", "--out-dir", tmp_path / "b", "--seed", 2)
    ok(capsys, "alias", "plan", d / "observations.csv", "--out-dir", tmp_path / "c", "--seed", 1)
    a, b, c = ((tmp_path / x / "plan_0.csv").read_text() for x in "abc")
    assert a == c and a != b
    ok(capsys, "alias", "plan", d / "observations.csv", "--out-dir", tmp_path / "h", "--interval-seconds", 86400)
    assert len(list((tmp_path / "h").glob("plan_*.csv"))) < len(list((tmp_path / "a").glob("plan_*.csv")))


def test_pipeline_command_and_overrides(synth_dir, tmp_path, capsys):
    d = synth_dir / "in"
    cfg = {
        "output_dir": str(tmp_path / "out"),
        "inputs": {"observations": str(d / "observations.csv"), "asn": str(d / "asn.txt"),
                   "country": str(d / "country.csv"), "geo": str(d / "geo.csv")},
        "stages": {"alias": False},
        "min_pairs": 10 ** 9,
    }
    (tmp_path / "p.json").write_text(json.dumps(cfg))
    outputs = ok(capsys, "pipeline", tmp_path / "p.json")
    assert "tracking" in outputs and "alias_verdicts" not in outputs
    assert (tmp_path / "out" / "geo_models.csv").read_text().strip() == "oui,offset,support,pair_count"
    ok(capsys, "pipeline", tmp_path / "p.json", "--min-pairs", 500)
    assert len((tmp_path / "out" / "geo_models.csv").read_text().splitlines()) > 1


def test_errors_are_json_on_stderr(tmp_path, capsys):
    code, out, err = run(capsys, "pipeline", tmp_path / "missing.json")
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "config"

    (tmp_path / "p.json").write_text(json.dumps({"output_dir": "o", "inputs": {"observations": "nope.csv"}}))
    code, _, err = run(capsys, "pipeline", tmp_path / "p.json")
    assert code == 2 and "nope.csv" in json.loads(err)["message"]
    assert not (tmp_path / "o").exists()

    code, _, err = run(capsys, "release", "--store", tmp_path / "absent", "--out", tmp_path / "r.txt")
    assert code == 1 and json.loads(err)["error"] == "FileNotFoundError"

    bad = tmp_path / "bad.csv"
    bad.write_text("1,zzz,v\n" * 5)
    code, _, err = run(capsys, "ingest", bad, "--store", tmp_path / "s")
    assert code == 2 and json.loads(err)["error"] == "ingest"


def test_console_script_exit_code(tmp_path):
    p = subprocess.run([sys.executable, "-m", "hitlist6.cli", "summarize", "--store", str(tmp_path / "x")],
                       capture_output=True, text=True)
    assert p.returncode == 1 and json.loads(p.stderr)["error"] == "FileNotFoundError"
    p = subprocess.run([sys.executable, "-m", "hitlist6.cli", "--help"], capture_output=True, text=True)
    assert p.returncode == 0
    for cmd in ("ingest", "summarize", "classify", "eui64", "track", "alias", "geolink", "synth", "release",
                "pipeline"):
        assert cmd in p.stdout
