import subprocess
import sys
import textwrap
from pathlib import Path

import pytest

from twostream import cli
from twostream.config import dump_config, load_config, parse_config
from twostream.errors import ConfigError, MassDefectWarning
from twostream.experiment import compare_runs, read_csv, run_experiment


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return path


def test_empty_config_names_the_missing_scheme():
    with pytest.raises(ConfigError) as exc:
        parse_config("")
    assert exc.value.errors == ["scheme: required field missing"]


def test_all_problems_reported_together():
    with pytest.raises(ConfigError) as exc:
        parse_config("""
scheme: ap_difff
colour: red
params: {lambda0: -1, chi: 2.0, speed: 3}
grid: {I: 10.5}
probes: [1.5]
""")
    msg = "\n".join(exc.value.errors)
    for fragment in ("scheme: unknown scheme", "colour: unknown key", "params.speed: unknown key",
                     "params.lambda0", "grid.I: expected an integer", "probes:", "chi"):
        assert fragment in msg


def test_round_trip_and_exponent_strings():
    cfg = parse_config("""
scheme: ap_diff
params: {lambda0: 1.0e8, G: -1}
grid: {I: 40}
snapshots: [2.0, 0.5]
time_unit: physical
""")
    assert cfg.lambda0 == 1e8 and cfg.snapshots == [0.5, 2.0]
    assert cfg.native_time(2.0) == pytest.approx(2e-8)
    again = parse_config(dump_config(cfg))
    assert again == cfg


def test_cfl_violation_is_rejected_with_the_bound():
    with pytest.raises(ConfigError) as exc:
        parse_config("scheme: ap_hyp\ngrid: {I: 10, dt: 0.5}\n")
    assert "grid.dt" in exc.value.errors[0] and "0.1" in exc.value.errors[0]
    with pytest.raises(ConfigError) as exc:
        parse_config("scheme: monte_carlo\nparams: {lambda0: 1.0e5}\ngrid: {dt: 1.0e-3}\n")
    assert "tumbling probability" in exc.value.errors[0]


def test_table_section_checks():
    with pytest.raises(ConfigError) as exc:
        parse_config("scheme: ks_limit\ntable: {param_name: G, values: [], mesh_pairs: [[30, 200]]}\n")
    msg = "\n".join(exc.value.errors)
    assert "param_name" in msg and "values" in msg and "not a multiple" in msg


def test_snapshot_files_and_mass_log(tmp_path):
    cfg = load_config(write(tmp_path, f"""
    scheme: ap_diff
    params: {{lambda0: 10}}
    grid: {{I: 20}}
    snapshots: [0.01, 0.02, 0.05]
    probes: [0.5]
    output: {tmp_path / "run"}
    """))
    # lambda0 = 10 on the unextended y-domain leaks a little mass, which is reported
    with pytest.warns(MassDefectWarning):
        out = run_experiment(cfg)
    assert sorted(p.name for p in out.glob("rho_*.csv")) == ["rho_t0.01.csv", "rho_t0.02.csv", "rho_t0.05.csv"]
    header, data = read_csv(out / "rho_t0.05.csv")
    assert header == ["x", "rho"] and data.shape == (21, 2)
    _, mass = read_csv(out / "mass.csv")
    assert mass.shape == (4, 3)
    assert (out / "ydist_x0.5.csv").exists() and (out / "run.yaml").exists()
    assert not (out / "FAILED").exists()


def test_compare_with_itself_is_zero(tmp_path):
    cfg = parse_config(f"scheme: ks_centered\ngrid: {{I: 20}}\nsnapshots: [0.01]\noutput: {tmp_path / 'a'}\n")
    a = run_experiment(cfg)
    rows = compare_runs(a, a)
    assert rows == [("t0.01", 20, 20, 0.0)]
    assert (a / "compare.csv").read_text().startswith("profile,I_a,I_b,linf_rel_err")


def test_monte_carlo_runs_are_bit_identical(tmp_path):
    text = "scheme: monte_carlo\nparams: {lambda0: 10}\ngrid: {I: 20}\nsnapshots: [0.01]\nparticles: 5000\nprobes: [0.5]\n"
    write(tmp_path, text)
    outs = []
    for name in ("a", "b"):
        assert cli.main(["run", str(tmp_path / "cfg.yaml"), "--out", str(tmp_path / name), "--seed", "3"]) == 0
        outs.append((tmp_path / name / "rho_t0.01.csv").read_bytes())
    assert outs[0] == outs[1]
    assert cli.main(["run", str(tmp_path / "cfg.yaml"), "--out", str(tmp_path / "c"), "--seed", "4"]) == 0
    assert (tmp_path / "c" / "rho_t0.01.csv").read_bytes() != outs[0]


def test_cli_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, "scheme: nope\n", "bad.yaml")
    assert cli.main(["run", str(bad)]) == 1
    assert "unknown scheme" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.yaml")]) == 1
    assert cli.main(["compare", str(tmp_path), str(tmp_path)]) == 1
    assert cli.main(["run", str(bad), "--threads", "0"]) == 1


def test_runtime_failure_leaves_a_marker(tmp_path, monkeypatch):
    from twostream import experiment

    def boom(run):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(experiment, "_run_macro", boom)
    cfg = write(tmp_path, f"scheme: ks_limit\ngrid: {{I: 10}}\noutput: {tmp_path / 'r'}\n")
    assert cli.main(["run", str(cfg)]) == 2
    assert "disk on fire" in (tmp_path / "r" / "FAILED").read_text()


def test_table_command(tmp_path):
    cfg = write(tmp_path, f"""
    scheme: ap_diff
    table: {{param_name: lambda0, values: [10], mesh_pairs: [[10, 20]]}}
    output: {tmp_path / "t"}
    """)
    assert cli.main(["table", str(cfg)]) == 0
    lines = (tmp_path / "t" / "table.csv").read_text().splitlines()
    assert lines[0] == "scheme,param_name,param_value,I,I_prime,linf_rel_err"
    assert lines[1].startswith("ap_diff,lambda0,10.0,10,20,")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "twostream", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "compare" in proc.stdout


def test_shipped_configs_parse():
    for path in sorted((Path(__file__).parents[1] / "configs").glob("*.yaml")):
        load_config(path)


def test_steady_config_reproduces_closed_form(tmp_path):
    from twostream.diagnostics import linf_rel_error, steady_ks

    path = Path(__file__).parents[1] / "configs" / "ap_diff_keller_segel_steady.yaml"
    assert cli.main(["run", str(path), "--out", str(tmp_path)]) == 0
    _, data = read_csv(tmp_path / "rho_steady.csv")
    cfg = load_config(path)
    assert linf_rel_error(data[:, 1], steady_ks(data[:, 0], cfg.params)) <= 1e-2
