import hashlib

from specgal import cli


BUNDLED = [
    "anomalous",
    "damped-wave",
    "ensemble-diffusion",
    "exponential-cube",
    "kato-rellich",
    "porous-medium",
    "stochastic-damped-wave",
]


def write_config(tmp_path, text, name="case.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


BAD_P_CONFIG = """
kind = "parabolic"

[domain]
geometry = "dirichlet-cube"
side_length = 6.283185307179586
dimension = 1
modes_per_axis = 3

[nonlinearity]
kind = "linear"
slope = 1.0

[initial]
kind = "bump"

[time]
horizon = 0.1

[audit]
p = 1
"""

BAD_TRACE_CONFIG = """
kind = "ensemble"

[domain]
geometry = "dirichlet-cube"
side_length = 3.141592653589793
dimension = 1
modes_per_axis = 4

[nonlinearity]
kind = "linear"
slope = 1.0

[kernel]
kind = "diagonal"
values = [10.0, 10.0, 10.0, 10.0]
trace_ceiling = 5.0

[initial]
kind = "kernel-sample"
seed = 1

[ensemble]
sample_count = 4
base_seed = 1

[time]
horizon = 0.1
"""

BAD_ALPHA_CONFIG = """
kind = "kato-rellich"

[kato_rellich]
alpha = 0.5
dimension = 3
potential_norm = 1.0
"""


def test_list_contains_bundled_scenarios(capsys):
    assert cli.main(["list"]) == 0
    output = capsys.readouterr().out
    for name in BUNDLED:
        assert name in output
    assert len(cli.list_scenarios()) >= 5


def test_every_bundled_scenario_validates():
    for name in BUNDLED:
        assert cli.main(["validate", name]) == 0, name


def test_run_writes_series_report_manifest(tmp_path):
    out = tmp_path / "out"
    code = cli.main(
        ["run", "exponential-cube", "--output-dir", str(out)]
    )
    assert code == 0
    series = out / "exponential-cube-series.csv"
    report = out / "exponential-cube-report.csv"
    manifest = out / "manifest.txt"
    assert series.is_file() and report.is_file() and manifest.is_file()
    lines = series.read_text().splitlines()
    comments = [line for line in lines if line.startswith("#")]
    assert comments
    header = next(line for line in lines if not line.startswith("#"))
    assert header.split(",")[0] == "t"
    manifest_text = manifest.read_text()
    assert hashlib.sha256(series.read_bytes()).hexdigest() in manifest_text


def test_rerun_reproduces_identical_outputs(tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert cli.main(["run", "porous-medium", "--output-dir", str(first)]) == 0
    assert cli.main(["run", "porous-medium", "--output-dir", str(second)]) == 0
    assert (first / "manifest.txt").read_bytes() == (
        second / "manifest.txt"
    ).read_bytes()
    assert (first / "porous-medium-series.csv").read_bytes() == (
        second / "porous-medium-series.csv"
    ).read_bytes()


def test_seed_override_changes_outputs(tmp_path):
    base = tmp_path / "base"
    moved = tmp_path / "moved"
    assert cli.main(["run", "exponential-cube", "--output-dir", str(base)]) == 0
    assert (
        cli.main(
            [
                "run",
                "exponential-cube",
                "--output-dir",
                str(moved),
                "--seed-override",
                "999",
            ]
        )
        == 0
    )
    assert (base / "exponential-cube-series.csv").read_bytes() != (
        moved / "exponential-cube-series.csv"
    ).read_bytes()


def test_incompatible_p_fails_validation(tmp_path, capsys):
    # side length 2 pi makes the coercivity constant 0.25, so p = 1
    # gives a negative decay margin
    path = write_config(tmp_path, BAD_P_CONFIG)
    assert cli.main(["validate", path]) == 2
    err = capsys.readouterr().err
    assert "a_p" in err
    assert cli.main(["run", path, "--output-dir", str(tmp_path)]) == 2


def test_trace_gate_rejects_kernel(tmp_path, capsys):
    path = write_config(tmp_path, BAD_TRACE_CONFIG)
    assert cli.main(["validate", path]) == 2
    assert "trace" in capsys.readouterr().err


def test_alpha_gate_rejects_small_exponent(tmp_path, capsys):
    path = write_config(tmp_path, BAD_ALPHA_CONFIG)
    assert cli.main(["validate", path]) == 2
    assert "alpha" in capsys.readouterr().err


def test_missing_config_exit_code(capsys):
    assert cli.main(["validate", "no-such-scenario"]) == 2
    assert "no config file" in capsys.readouterr().err


def test_emitted_tables_round_trip(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", "ensemble-diffusion", "--output-dir", str(out)]) == 0
    for path in (
        out / "ensemble-diffusion-series.csv",
        out / "ensemble-diffusion-report.csv",
    ):
        lines = [
            line
            for line in path.read_text().splitlines()
            if line and not line.startswith("#")
        ]
        for row in lines[1:]:
            for cell in row.split(","):
                try:
                    value = float(cell)
                except ValueError:
                    continue  # non-numeric report entries
                assert cli._fmt(value) == cell


def test_run_scenario_returns_manifest(tmp_path):
    manifest = cli.run_scenario(
        "kato-rellich", output_dir=str(tmp_path / "kr")
    )
    assert manifest.scenario == "kato-rellich"
    assert manifest.wall_time_seconds >= 0.0
    assert "kato-rellich-report.csv" in manifest.output_checksums
    text = (tmp_path / "kr" / "manifest.txt").read_text()
    assert "wall" not in text  # the on-disk manifest stays reproducible
