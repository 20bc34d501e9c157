import json

import pytest

from fourierlab.cli import RunConfig, load_config, main, parse_config, run, select_suites
from fourierlab.corpus import CorpusSpec, digest, gen_corpus
from fourierlab.errors import ConfigError
from fourierlab.suites import SUITES


def _strip_timing(report):
    report = json.loads(json.dumps(report))
    for r in report["records"]:
        r.pop("wall_time_ms")
    for s in report["suites"].values():
        s.pop("wall_time_ms")
    return report


def test_list_and_explain(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert all(sid in out for sid in SUITES)
    assert main(["explain", "su2.f_pi_bound"]) == 0
    out = capsys.readouterr().out
    assert "tolerance" in out and "n / (2n + 2)" in out
    assert main(["explain", "nosuch"]) == 2


def test_unknown_suite_exits_2(capsys):
    assert main(["verify", "--suite", "nosuch.*"]) == 2
    assert "nosuch" in capsys.readouterr().err


def test_passing_run_exits_0(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "--suite", "su2.f_pi_bound", "--seed", "42", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["summary"] == {"total": 5, "passed": 5, "failed": 0}
    assert [r["rhs"] for r in report["records"]] == [n / (2 * n + 2) for n in range(5)]


def test_failing_run_exits_1(tmp_path):
    out = tmp_path / "r.json"
    code = main(["verify", "--suite", "su2.nonvanishing", "--tol-scale", "1e-30",
                 "--out", str(out)])
    assert code == 1
    report = json.loads(out.read_text())
    assert report["summary"]["failed"] == 1
    assert report["records"][0]["pass"] is False


def test_report_is_deterministic():
    cfg = RunConfig(suites=["su2.*", "decomp.heis_translation", "axb.madb_fd"], seed=7,
                    corpus_size=4)
    a, b = run(cfg), run(cfg)
    assert _strip_timing(a) == _strip_timing(b)
    ids = [r["id"] for r in a["records"]]
    assert ids == sorted(ids, key=lambda s: (s.split("[")[0], int(s.split("[")[1].split("]")[0])))


def test_parallel_matches_serial():
    base = dict(suites=["su2.schur", "su2.f_pi_bound", "decomp.heis_translation"], seed=3,
                corpus_size=3)
    a = run(RunConfig(**base))
    b = run(RunConfig(jobs=2, **base))
    assert _strip_timing(a) == _strip_timing(b)


def test_recorded_digest_matches_regeneration():
    report = run(RunConfig(suites=["su2.schur"], seed=99, corpus_size=5))
    spec = CorpusSpec("su2.vectors", 5, (("n_max", 4),))
    items = gen_corpus(99, spec)
    assert report["suites"]["su2.schur"]["corpus_digest"] == digest(items)
    assert [r["inputs_digest"] for r in report["records"]] == [digest(it) for it in items]


def test_flat_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nsuites = su2.*, decomp.w_isometry\nseed = 5\n"
                    "quad.rel_tol = 1e-9\nquad.b_cutoff_policy.target_tail = 1e-6\n"
                    "tolerances.su2.schur = 1e-7\ncorpus_size = 2\n")
    cfg = parse_config(load_config(str(path)))
    assert cfg.seed == 5 and cfg.corpus_size == 2
    assert cfg.quad.rel_tol == 1e-9
    assert cfg.quad.b_cutoff_policy.target_tail == 1e-6
    assert cfg.tolerances == {"su2.schur": 1e-7}
    assert select_suites(cfg.suites)[0] == "decomp.w_isometry"


def test_json_config_and_echo(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"suites": ["su2.f_pi_bound"], "seed": 1, "max_n_su2": 2,
                                "quad": {"rel_tol": 1e-8,
                                         "b_cutoff_policy": {"type": "Fixed", "cutoff": 50}}}))
    cfg = parse_config(load_config(str(path)))
    echo = run(cfg)["config"]
    assert echo["quad"]["b_cutoff_policy"] == {"type": "Fixed", "cutoff": 50.0}
    assert echo["max_n_su2"] == 2


@pytest.mark.parametrize("data", [
    {"suites": ["axb.nope"]},
    {"bogus": 1},
    {"tolerances": {"nosuch": 1e-3}},
    {"quad": {"rel_tol": 2.0}},
    {"quad": {"warp": 1}},
    {"max_n_heis": 9},
    {"seed": "abc"},
])
def test_bad_configs(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_bad_config_file_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("this line has no equals sign\n")
    assert main(["verify", "--config", str(path)]) == 2
    assert "line 1" in capsys.readouterr().err
