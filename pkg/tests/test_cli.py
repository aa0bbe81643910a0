import numpy as np
import pytest

from digraphon_mfg import ConfigError, sis_env
from digraphon_mfg.cli import main
from digraphon_mfg.config import build_scenario, load_config, parse_config
from digraphon_mfg.csvio import read_policy

BASE_CONFIG = """\
scenario:
  env: sis
  digraphon: rotated-uniform
  params:
    horizon: 6
solver:
  grid: 4
  iterations: 8
  learning_rate: 0.3
sim:
  n_list: [3, 6]
  samples: 4
  gap_n: 8
  deviation_runs: 4
  deviation_agents: 3
  graph_n: 5
seed: 3
"""


@pytest.fixture
def workdir(tmp_path):
    cfg = tmp_path / "experiment.yaml"
    cfg.write_text(BASE_CONFIG + f"output: {tmp_path / 'out'}\n")
    return tmp_path, cfg


def read_lines(path):
    return path.read_text().splitlines()


def test_solve_writes_three_csvs(workdir):
    tmp, cfg = workdir
    assert main(["solve", "--config", str(cfg)]) == 0
    out = tmp / "out"
    expl = read_lines(out / "exploitability.csv")
    assert expl[0] == "iteration,exploitability"
    assert len(expl) == 1 + 8
    values = [float(line.split(",")[1]) for line in expl[1:]]
    assert np.isfinite(values).all()

    mf = read_lines(out / "meanfield.csv")
    assert mf[0] == "t,alpha,state,probability"
    assert len(mf) == 1 + (6 + 1) * 4 * 2

    pol = read_lines(out / "policy.csv")
    assert pol[0] == "t,alpha,state,action,probability"
    assert len(pol) == 1 + 6 * 4 * 2 * 2


def test_solve_rerun_is_byte_identical(workdir):
    tmp, cfg = workdir
    assert main(["solve", "--config", str(cfg)]) == 0
    first = {name: (tmp / "out" / name).read_bytes()
             for name in ("exploitability.csv", "policy.csv", "meanfield.csv")}
    assert main(["solve", "--config", str(cfg), "--workers", "4"]) == 0
    for name, content in first.items():
        assert (tmp / "out" / name).read_bytes() == content


def test_policy_roundtrip(workdir):
    tmp, cfg = workdir
    main(["solve", "--config", str(cfg)])
    env = sis_env(horizon=6)
    pi = read_policy(tmp / "out" / "policy.csv", env)
    assert pi.grid.m == 4
    assert pi.horizon == 6
    assert np.abs(pi.pi.sum(axis=3) - 1.0).max() <= 1e-12


def test_converge_requires_policy(workdir):
    tmp, cfg = workdir
    assert main(["converge", "--config", str(cfg)]) == 2


def test_converge_and_gap_outputs(workdir):
    tmp, cfg = workdir
    main(["solve", "--config", str(cfg)])
    assert main(["converge", "--config", str(cfg)]) == 0
    conv = read_lines(tmp / "out" / "convergence.csv")
    assert conv[0] == "N,delta_mu_mean,ci_low,ci_high,samples"
    assert len(conv) == 3
    for line in conv[1:]:
        n, mean, lo, hi, samples = line.split(",")
        assert float(lo) <= float(mean) <= float(hi)
        assert int(samples) == 4

    assert main(["gap", "--config", str(cfg)]) == 0
    gap = read_lines(tmp / "out" / "gap.csv")
    assert gap[0] == "agent_index,alpha,gap_estimate,std_error"
    assert len(gap) == 1 + 3
    assert all(float(line.split(",")[2]) >= 0.0 for line in gap[1:])


def test_sample_graph_degenerate(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(
        "scenario: {env: sis, digraphon: 'constant:1.0'}\n"
        "sim: {graph_n: 5}\n"
        f"output: {tmp_path / 'out'}\n"
    )
    assert main(["sample-graph", "--config", str(cfg)]) == 0
    lines = read_lines(tmp_path / "out" / "edges.csv")
    assert lines[0] == "i,j,color"
    assert len(lines) == 1 + 20
    assert all(line.endswith(",2") for line in lines[1:])


def test_sample_graph_reproducible_and_lln(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(
        "scenario: {env: sis, digraphon: 'constant:0.25'}\n"
        "sim: {graph_n: 500}\n"
        f"output: {tmp_path / 'out'}\n"
    )
    assert main(["sample-graph", "--config", str(cfg)]) == 0
    first = (tmp_path / "out" / "edges.csv").read_bytes()
    assert main(["sample-graph", "--config", str(cfg)]) == 0
    assert (tmp_path / "out" / "edges.csv").read_bytes() == first
    colors = np.array([int(line.rsplit(",", 1)[1])
                       for line in read_lines(tmp_path / "out" / "edges.csv")[1:]])
    frac = (colors == 2).mean()
    # 99% binomial interval around p = 0.25 at 500 * 499 draws
    assert abs(frac - 0.25) <= 2.576 * np.sqrt(0.25 * 0.75 / colors.size)


def test_seed_flag_changes_results(workdir):
    tmp, cfg = workdir
    main(["solve", "--config", str(cfg)])
    main(["converge", "--config", str(cfg)])
    first = (tmp / "out" / "convergence.csv").read_bytes()
    main(["converge", "--config", str(cfg), "--seed", "99"])
    assert (tmp / "out" / "convergence.csv").read_bytes() != first


def test_out_flag_overrides_directory(workdir, tmp_path):
    tmp, cfg = workdir
    other = tmp_path / "elsewhere"
    assert main(["solve", "--config", str(cfg), "--out", str(other)]) == 0
    assert (other / "policy.csv").exists()


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("scenario: {env: sis, digraphon: rotated-uniform}\n"
                   "solver: {learning_rt: 0.5}\n")
    assert main(["solve", "--config", str(cfg)]) == 2
    assert "solver.learning_rt" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_bad_yaml_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("scenario: [unclosed\n")
    assert main(["solve", "--config", str(cfg)]) == 2


def test_minimal_config_defaults():
    cfg = parse_config({"scenario": {"env": "sis", "digraphon": "rotated-uniform"}})
    assert cfg.solver.grid == 50
    assert cfg.solver.iterations == 100
    assert cfg.solver.learning_rate == 0.1
    assert cfg.sim.n_list == [4, 16, 64, 256]
    assert cfg.sim.samples == 100
    assert cfg.seed == 0
    assert cfg.output == "out"


def test_config_validation_errors():
    with pytest.raises(ConfigError, match="scenario.env"):
        parse_config({"scenario": {"env": "nope", "digraphon": "rotated-uniform"}})
    with pytest.raises(ConfigError, match="solver.iterations"):
        parse_config({"scenario": {"env": "sis", "digraphon": "rotated-uniform"},
                      "solver": {"iterations": 0}})
    with pytest.raises(ConfigError, match="sim.n_list"):
        parse_config({"scenario": {"env": "sis", "digraphon": "rotated-uniform"},
                      "sim": {"n_list": []}})
    with pytest.raises(ConfigError, match="learning_rate"):
        parse_config({"scenario": {"env": "sis", "digraphon": "rotated-uniform"},
                      "solver": {"learning_rate": 0}})
    with pytest.raises(ConfigError, match="required"):
        parse_config({"scenario": {"env": "sis"}})


def test_adaptive_flag_handling():
    cfg = parse_config({"scenario": {"env": "sis", "digraphon": "combined-uniform-ranked",
                                     "adaptive": True}})
    assert cfg.scenario.env == "sis-adaptive"
    env, W, sched = build_scenario(cfg)
    assert env.name == "sis-adaptive"
    assert "switch" in sched.description

    cfg2 = parse_config({"scenario": {"env": "sis-adaptive",
                                      "digraphon": "double-rotated-uniform"}})
    assert cfg2.scenario.adaptive is True

    with pytest.raises(ConfigError, match="adaptive"):
        parse_config({"scenario": {"env": "sis-adaptive", "digraphon": "rotated-uniform",
                                   "adaptive": False}})
    with pytest.raises(ConfigError, match="beach"):
        parse_config({"scenario": {"env": "beach", "digraphon": "rotated-uniform",
                                   "adaptive": True}})
    # adaptive schedule needs a three color digraphon
    bad = parse_config({"scenario": {"env": "sis-adaptive", "digraphon": "rotated-uniform"}})
    with pytest.raises(ConfigError):
        build_scenario(bad)


def test_scenario_params_override():
    cfg = parse_config({"scenario": {"env": "systemic-risk", "digraphon": "rotated-uniform",
                                     "params": {"beta": 0.5, "lambda": 0.3}}})
    env, _, _ = build_scenario(cfg)
    assert env.params.beta == 0.5
    assert env.params.lam == 0.3
    bad = parse_config({"scenario": {"env": "sis", "digraphon": "rotated-uniform",
                                     "params": {"bogus": 1}}})
    with pytest.raises(ConfigError, match="bogus"):
        build_scenario(bad)


def test_load_config_seed_override(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("scenario: {env: sis, digraphon: rotated-uniform}\nseed: 4\n")
    assert load_config(cfg).seed == 4
    assert load_config(cfg, seed=9).seed == 9
    assert load_config(cfg, output="elsewhere").output == "elsewhere"
