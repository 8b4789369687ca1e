import datetime as dt
import json

import pytest

from bikefixture import write_hour_csv
from fsfir import cli, experiments
from fsfir.errors import InvalidArgumentError
from fsfir.experiments import ExperimentConfig, m_rule


def _cfg(**kw):
    base = dict(n=300, reps=2, grid_points=64, m_grid=[2, 3], out=None)
    base.update(kw)
    return ExperimentConfig(**base)


def test_parse_int_list():
    assert cli.parse_int_list("2..14,20,30,40") == list(range(2, 15)) + [20, 30, 40]
    assert cli.parse_int_list("5") == [5]
    assert cli.parse_float_list("0.01,0.5") == [0.01, 0.5]


def test_m_rule():
    assert m_rule(10000) == 3
    assert m_rule(500) == 2
    assert m_rule(5, d=3) == 3
    assert m_rule(2, t=100.0) == 1


@pytest.mark.parametrize("kw", [dict(reps=0), dict(model="M9"), dict(method="pca"),
                                dict(m_grid=[]), dict(n_list=[800, 200]), dict(noise_var=-1.0)])
def test_config_rejects(kw):
    with pytest.raises(InvalidArgumentError):
        _cfg(**kw)


def test_sweep_summary_and_flags():
    res = experiments.synth_sweep(_cfg(model="M3", m_grid=[1, 2, 3], d=2))
    m1 = [r for r in res.rows if r["grid_value"] == 1]
    assert all(r["error"] is None and r["status"] != "ok" for r in m1)
    s1 = next(s for s in res.summary if s["grid_value"] == 1)
    assert s1["failure_fraction"] == 1.0 and s1["mean_error"] is None
    assert sum(s["is_min"] for s in res.summary) == 1
    assert res.extra["argmin"] in (2, 3)


def test_replicate_isolation():
    a = experiments.synth_sweep(_cfg(reps=3))
    b = experiments.synth_sweep(_cfg(reps=2))
    assert [r["error"] for r in a.rows[:4]] == [r["error"] for r in b.rows]


def test_workers_do_not_change_results():
    a = experiments.synth_sweep(_cfg(reps=3, method="tfsir"))
    b = experiments.synth_sweep(_cfg(reps=3, method="tfsir", workers=2))
    assert a.rows == b.rows


def test_rfsir_sweep_uses_rho_grid():
    res = experiments.synth_sweep(_cfg(method="rfsir", rho_grid=[0.05, 0.5], basis_size=20))
    assert [s["grid_value"] for s in res.summary] == [0.05, 0.5]
    assert all(s["param"] == "rho" for s in res.summary)


def test_convergence_single_size_has_no_trend():
    res = experiments.convergence_study(_cfg(command="convergence", model="M3", n_list=[400], reps=2))
    assert res.extra["strictly_decreasing"] is None
    assert res.summary[0]["m"] == m_rule(400)
    with pytest.raises(InvalidArgumentError):
        experiments.convergence_study(_cfg(command="convergence", method="rfsir"))


def test_write_result_files(tmp_path):
    res = experiments.synth_sweep(_cfg(reps=1))
    paths = experiments.write_result(res, tmp_path / "sweep.csv")
    assert set(paths) == {"rows", "summary", "config"}
    side = json.loads(paths["config"].read_text())
    assert side["config"]["n"] == 300 and side["config"]["out"].endswith("sweep.csv")
    assert paths["rows"].read_text().splitlines()[0] == "model,method,param,grid_value,rep,error,status"


@pytest.fixture(scope="module")
def hour_csv(tmp_path_factory):
    p = tmp_path_factory.mktemp("bike") / "hour.csv"
    sats = [dt.date(2011, 1, 1) + dt.timedelta(7 * k) for k in range(105)]
    write_hour_csv(p, drop={(sats[3], 2), (sats[40], 5), (sats[90], 0)})
    return p


def test_bike_eval_table(hour_csv, tmp_path):
    cfg = ExperimentConfig(command="bike-eval", data=str(hour_csv), reps=2, grid_points=64,
                           m_grid=[1, 3], d_grid=[1, 2])
    res = experiments.bike_eval(cfg)
    assert res.extra["retained_saturdays"] == 102 and "discrepancy" not in res.extra
    cell = {(s["d"], s["m"]): s for s in res.summary}
    assert cell[(2, 1)]["mean_mse"] is None
    assert all(cell[k]["mean_mse"] > 0 for k in [(1, 1), (1, 3), (2, 3)])
    assert not any(r["d"] == 2 and r["m"] == 1 for r in res.rows)
    paths = experiments.write_result(res, tmp_path / "bike.csv")
    table = paths["table"].read_text().splitlines()
    assert len(table) == 3 and table[2].startswith("2 ")


def test_bike_eval_too_few_days(tmp_path):
    p = tmp_path / "hour.csv"
    write_hour_csv(p, days=200)
    cfg = ExperimentConfig(command="bike-eval", data=str(p), reps=1, grid_points=32)
    with pytest.raises(InvalidArgumentError, match="Saturdays"):
        experiments.bike_eval(cfg)


def test_cli_flags_override_config_file(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"n": 250, "reps": 5, "seed": 3}))
    args = cli.build_parser().parse_args(["synth-sweep", "--config", str(conf), "--reps", "1"])
    cfg = cli.config_from_args(args)
    assert (cfg.n, cfg.reps, cfg.seed) == (250, 1, 3)
    assert cfg.out == "synth-sweep.csv"


def test_cli_error_exit(tmp_path, capsys):
    rc = cli.main(["bike-eval", "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o.csv")])
    assert rc == 2 and "error" in capsys.readouterr().err


def _run_twice(tmp_path, argv):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        d.mkdir()
        assert cli.main(argv + ["--out", str(d / "res.csv")]) == 0
        outs.append(d)
    for name in ("res.csv", "res.summary.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    c0, c1 = (json.loads((o / "res.config.json").read_text()) for o in outs)
    c0["config"].pop("out"), c1["config"].pop("out")
    assert c0 == c1


def test_cli_sweep_deterministic(tmp_path):
    _run_twice(tmp_path, ["synth-sweep", "--n", "300", "--reps", "2", "--m-grid", "2..3",
                          "--grid-points", "64", "--seed", "11", "--workers", "2"])


def test_cli_convergence_deterministic(tmp_path):
    _run_twice(tmp_path, ["convergence", "--model", "M3", "--n-list", "200,400", "--reps", "2",
                          "--grid-points", "64", "--workers", "2"])


def test_cli_bike_deterministic(tmp_path, hour_csv):
    _run_twice(tmp_path, ["bike-eval", "--data", str(hour_csv), "--reps", "2", "--d-grid", "1,2",
                          "--m-grid", "1,3", "--grid-points", "64", "--workers", "2"])
