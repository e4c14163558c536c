"""Scenario parsing, command orchestration, CSV schema, exit codes, and
measured-data import."""

import warnings

import numpy as np
import pytest

from bodychannel.analysis import simulate_frequency_sweep
from bodychannel.channel import BodyModel, GroundedTx, ReceiverParams, resonant_frequency
from bodychannel.cli import (
    ConfigError,
    CsvFormatError,
    DuplicateAxisError,
    ResultTable,
    UnsortedRowsWarning,
    import_measured,
    load_scenario,
    main,
    parse_quantity,
    sweep_to_table,
)
from helpers import SCENARIO_DIR

BASE_SCENARIO = """\
[receiver]
C_ret = 1p
C_GB = 5p
L = 4.222m
R_L = 1k
C_L = 0
r_s = 0

[source]
kind = grounded
V_in = 12
convention = pp
R_S = 0

[body]
C_B = 150p
R_B = 0

[sweep]
axis = frequency
lo = 100k
hi = 10M
points = 201
spacing = log
"""


def _scenario(tmp_path, text=BASE_SCENARIO, name="case.scn"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ── quantity and scenario parsing ───────────────────────────────────────


def test_parse_quantity_suffixes():
    assert parse_quantity("1p") == 1e-12
    assert parse_quantity("4.222m") == pytest.approx(4.222e-3, rel=1e-15)
    assert parse_quantity("10k") == 10e3
    assert parse_quantity("1.6M") == 1.6e6
    assert parse_quantity("330n") == pytest.approx(330e-9, rel=1e-15)
    assert parse_quantity("2u") == pytest.approx(2e-6, rel=1e-15)
    assert parse_quantity("1e-12") == 1e-12
    assert parse_quantity("-3.5") == -3.5


def test_parse_quantity_rejects_garbage():
    for bad in ("1q", "ten", "", "1.2.3", "nan", "inf"):
        with pytest.raises(ConfigError):
            parse_quantity(bad)


def test_load_scenario_full(tmp_path):
    config = load_scenario(_scenario(tmp_path))
    rx = config.receiver
    assert rx.c_ret == pytest.approx(1e-12, rel=1e-15)
    assert rx.c_gb == pytest.approx(5e-12, rel=1e-15)
    assert rx.l == pytest.approx(4.222e-3, rel=1e-15)  # suffix scaling, not a literal
    assert (rx.r_l, rx.c_l, rx.r_s) == (1000.0, 0.0, 0.0)
    assert config.source == GroundedTx(v_in=12.0, convention="pp", r_src=0.0)
    assert config.body == BodyModel(c_b=150e-12, r_b=0.0)
    assert config.sweep.points == 201 and config.sweep.spacing == "log"
    assert len(config.sha256) == 64


def test_unknown_key_is_rejected_with_path(tmp_path):
    text = BASE_SCENARIO.replace("C_L = 0", "C_L = 0\nC_X = 1p")
    with pytest.raises(ConfigError, match=r"receiver\.C_X"):
        load_scenario(_scenario(tmp_path, text))


def test_missing_key_is_rejected_with_path(tmp_path):
    text = BASE_SCENARIO.replace("C_L = 0\n", "")
    with pytest.raises(ConfigError, match=r"receiver\.C_L"):
        load_scenario(_scenario(tmp_path, text))


def test_unknown_section_is_rejected(tmp_path):
    with pytest.raises(ConfigError, match=r"\[rx\]"):
        load_scenario(_scenario(tmp_path, BASE_SCENARIO + "\n[rx]\nC_ret = 1p\n"))


def test_misnumbered_receiver_section_is_rejected(tmp_path):
    with pytest.raises(ConfigError, match="receiver2"):
        load_scenario(_scenario(tmp_path, BASE_SCENARIO + "\n[receiver1]\nC_ret = 1p\n"))


def test_keys_need_a_section(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(_scenario(tmp_path, "stray = 1\n" + BASE_SCENARIO))


def test_wearable_source_block(tmp_path):
    text = BASE_SCENARIO.replace(
        "kind = grounded\nV_in = 12\nconvention = pp\nR_S = 0",
        "kind = wearable\nV_in = 5\nconvention = rms\nC_ret_tx = 1p",
    )
    config = load_scenario(_scenario(tmp_path, text))
    assert config.source.c_ret_tx == 1e-12


def test_bad_source_kind(tmp_path):
    text = BASE_SCENARIO.replace("kind = grounded", "kind = floor")
    with pytest.raises(ConfigError, match="source.kind"):
        load_scenario(_scenario(tmp_path, text))


def test_negative_physical_value_carries_section(tmp_path):
    text = BASE_SCENARIO.replace("R_L = 1k", "R_L = -5")
    with pytest.raises(ConfigError, match="receiver"):
        load_scenario(_scenario(tmp_path, text))


# ── shipped scenarios ───────────────────────────────────────────────────


def test_shipped_scenarios_all_parse():
    names = {p.name for p in SCENARIO_DIR.glob("*.scn")}
    assert names == {"fig4a.scn", "fig4c.scn", "rx1.scn", "rx2.scn", "rx3.scn", "safety_example.scn"}
    for name in names:
        load_scenario(SCENARIO_DIR / name)


def test_sweep_freq_on_calibrated_scenario(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep-freq", "--config", str(SCENARIO_DIR / "fig4a.scn"), "--out", str(out)])
    assert code == 0
    sweep = import_measured(out, axis="frequency")
    peak = sweep.values[int(np.argmax(sweep.p_out_rms))]
    assert peak == pytest.approx(1.6e6, rel=0.01)


def test_optimize_load_on_lossy_scenario(tmp_path):
    out = tmp_path / "opt.csv"
    code = main(["optimize-load", "--config", str(SCENARIO_DIR / "fig4c.scn"), "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    header = lines[-2].split(",")
    values = [float(v) for v in lines[-1].split(",")]
    row = dict(zip(header, values))
    assert row["load_opt[ohm]"] == pytest.approx(1000.0, rel=1e-3)
    assert row["constraint_active"] == 0.0


def test_sweep_vin_reaches_calibrated_power(tmp_path):
    out = tmp_path / "vin.csv"
    code = main(["sweep-vin", "--config", str(SCENARIO_DIR / "rx3.scn"), "--out", str(out)])
    assert code == 0
    sweep = import_measured(out, axis="input_voltage")
    assert sweep.values[-1] == 12.0
    assert sweep.p_out_rms[-1] == pytest.approx(2.10e-3, rel=0.05)
    slope = np.polyfit(np.log(sweep.values), np.log(sweep.p_out_rms), 1)[0]
    assert slope == pytest.approx(2.0, abs=1e-6)


def test_safety_scenario_passes(tmp_path):
    out = tmp_path / "safety.csv"
    code = main(["safety", "--config", str(SCENARIO_DIR / "safety_example.scn"), "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert "contact_current_rms[A]" in text
    row = [float(v) for v in text.splitlines()[-1].split(",")]
    assert row[1] == pytest.approx(6.99e-3, rel=1e-3)
    assert row[3] == pytest.approx(2.863, abs=2e-3)


def test_safety_failure_exits_4(tmp_path):
    text = (SCENARIO_DIR / "safety_example.scn").read_text()
    hot = text.replace("V_in = 12", "V_in = 60")
    path = tmp_path / "hot.scn"
    path.write_text(hot, encoding="utf-8")
    limits = (SCENARIO_DIR / "example_limits.lmt").read_text()
    (tmp_path / "example_limits.lmt").write_text(limits, encoding="utf-8")
    code = main(["safety", "--config", str(path), "--out", str(tmp_path / "r.csv")])
    assert code == 4


def test_max_safe_vin_value(tmp_path):
    out = tmp_path / "msv.csv"
    code = main(["max-safe-vin", "--config", str(SCENARIO_DIR / "safety_example.scn"), "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[-2].startswith("v_in_max[Vpp]")
    v_max = float(lines[-1].split(",")[0])
    assert v_max == pytest.approx(34.4, abs=0.05)


def test_resonance_emits_single_importable_row(tmp_path):
    out = tmp_path / "res.csv"
    code = main(["resonance", "--config", str(SCENARIO_DIR / "fig4a.scn"), "--out", str(out)])
    assert code == 0
    lines = [l for l in out.read_text().splitlines() if l and not l.startswith("#")]
    assert len(lines) == 2  # header + one row
    f0 = float(lines[1].split(",")[0])
    assert f0 == pytest.approx(1.6e6, rel=0.01)


def test_oracle_check_passes_default_tolerance(tmp_path):
    out = tmp_path / "oracle.csv"
    code = main([
        "oracle-check", "--config", str(SCENARIO_DIR / "fig4a.scn"),
        "--points", "40", "--out", str(out),
    ])
    assert code == 0
    rows = [l for l in out.read_text().splitlines() if l and not l.startswith("#")][1:]
    assert max(float(r.split(",")[1]) for r in rows) < 1e-9


def test_oracle_flag_matches_closed_form(tmp_path):
    base = tmp_path / "closed.csv"
    forced = tmp_path / "mna.csv"
    argv = ["sweep-freq", "--config", str(SCENARIO_DIR / "fig4a.scn"), "--points", "25"]
    assert main(argv + ["--out", str(base)]) == 0
    assert main(argv + ["--oracle", "--out", str(forced)]) == 0
    a = import_measured(base, axis="frequency")
    b = import_measured(forced, axis="frequency")
    assert np.max(np.abs(a.p_out_rms - b.p_out_rms) / b.p_out_rms) < 1e-9


# ── determinism ─────────────────────────────────────────────────────────


def test_repeated_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["sweep-freq", "--config", str(SCENARIO_DIR / "fig4a.scn"), "--points", "301"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


# ── exit codes ──────────────────────────────────────────────────────────


def test_validation_failure_exits_2(tmp_path):
    bad = _scenario(tmp_path, BASE_SCENARIO.replace("C_ret = 1p", "C_ret = 1q"))
    assert main(["sweep-freq", "--config", str(bad)]) == 2
    missing = tmp_path / "nope.scn"
    assert main(["sweep-freq", "--config", str(missing)]) == 2


def test_axis_mismatch_exits_2(tmp_path):
    path = _scenario(tmp_path)
    assert main(["sweep-load", "--config", str(path)]) == 2
    assert main(["optimize-load", "--config", str(path)]) == 2


def test_model_error_exits_3(tmp_path):
    text = BASE_SCENARIO.replace("axis = frequency", "axis = load")
    path = _scenario(tmp_path, text)
    # r_s = 0: the load objective is unbounded, a model-level failure.
    assert main(["optimize-load", "--config", str(path)]) == 3


def test_safety_without_table_exits_2(tmp_path):
    path = _scenario(tmp_path)
    assert main(["safety", "--config", str(path)]) == 2


def test_plot_data_needs_out_file(tmp_path):
    path = _scenario(tmp_path)
    assert main(["sweep-freq", "--config", str(path), "--plot-data"]) == 2


def test_plot_data_writes_two_column_files(tmp_path):
    path = _scenario(tmp_path)
    out = tmp_path / "curve.csv"
    code = main(["sweep-freq", "--config", str(path), "--points", "16", "--out", str(out), "--plot-data"])
    assert code == 0
    plot = tmp_path / "curve.csv.p_out_rms.plot"
    assert plot.exists()
    data_lines = [l for l in plot.read_text().splitlines() if l and not l.startswith("#")]
    assert len(data_lines) == 16
    assert all(len(l.split()) == 2 for l in data_lines)


# ── multi receiver and topology commands ────────────────────────────────

MULTI_SCENARIO = BASE_SCENARIO.replace("C_GB = 5p", "C_GB = 0") + """
[receiver2]
C_ret = 30p
C_GB = 0
L = 0.33m
R_L = 1k
C_L = 0
r_s = 0
"""


def test_multi_lists_each_receiver(tmp_path):
    path = _scenario(tmp_path, MULTI_SCENARIO)
    out = tmp_path / "multi.csv"
    assert main(["multi", "--config", str(path), "--out", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines() if l and not l.startswith("#")]
    assert lines[0] == "receiver,frequency[Hz],v_o_mag[V],p_out_rms[W]"
    assert len(lines) == 3
    f1 = float(lines[1].split(",")[1])
    f2 = float(lines[2].split(",")[1])
    assert f1 == pytest.approx(2.449e6, rel=1e-2)  # 4.222 mH on 1 pF
    assert f2 == pytest.approx(1.6e6, rel=1e-2)


def test_multi_joint_mode_adds_deviation_columns(tmp_path):
    path = _scenario(tmp_path, MULTI_SCENARIO)
    out = tmp_path / "joint.csv"
    assert main(["multi", "--config", str(path), "--joint", "--out", str(out)]) == 0
    header = [l for l in out.read_text().splitlines() if not l.startswith("#")][0]
    assert header.endswith("p_joint_rms[W],deviation_rel")


TOPOLOGY_SCENARIO = BASE_SCENARIO.replace(
    "kind = grounded\nV_in = 12\nconvention = pp\nR_S = 0",
    "kind = resonant-wearable\nV_in = 12\nconvention = pp\nC_ret_tx = 1p\nQ = 10",
)


def test_compare_topologies_orders_pairings(tmp_path):
    path = _scenario(tmp_path, TOPOLOGY_SCENARIO)
    out = tmp_path / "topo.csv"
    assert main(["compare-topologies", "--config", str(path), "--points", "64", "--out", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines() if l and not l.startswith("#")]
    assert lines[0] == "frequency[Hz],m2m_gain[dB],m2w_gain[dB],w2w_gain[dB],w2w_resonant_gain[dB]"
    rows = np.array([[float(v) for v in l.split(",")] for l in lines[1:]])
    assert np.all(rows[:, 1] >= rows[:, 2] - 1e-9)  # M2M >= M2W everywhere here
    assert np.all(rows[:, 2] >= rows[:, 3])  # M2W >= W2W


def test_compare_topologies_needs_resonant_wearable_source(tmp_path):
    path = _scenario(tmp_path)
    assert main(["compare-topologies", "--config", str(path)]) == 2


def test_fit_command_recovers_parameters(tmp_path):
    truth = ReceiverParams(c_ret=1.3e-12, c_gb=4.2e-12, l=4.222e-3, r_l=1000.0)
    src = GroundedTx(v_in=12.0, convention="pp")
    body = BodyModel(c_b=150e-12)
    f0 = resonant_frequency(truth)
    sweep = simulate_frequency_sweep(truth, src, body, np.geomspace(f0 / 3, f0 * 3, 41))
    table = sweep_to_table(sweep)
    data_path = tmp_path / "measured.csv"
    data_path.write_text(table.to_csv(), encoding="utf-8")

    text = BASE_SCENARIO + f"\n[fit]\ndata = {data_path.name}\nfree = C_ret,C_GB\n"
    path = _scenario(tmp_path, text)
    out = tmp_path / "fit.csv"
    assert main(["fit", "--config", str(path), "--out", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines() if l and not l.startswith("#")]
    row = dict(zip(lines[0].split(","), [float(v) for v in lines[1].split(",")]))
    assert row["C_ret[F]"] == pytest.approx(truth.c_ret, rel=5e-3)
    assert row["C_GB[F]"] == pytest.approx(truth.c_gb, rel=5e-3)
    assert row["converged"] == 1.0


def test_fit_without_section_exits_2(tmp_path):
    path = _scenario(tmp_path)
    assert main(["fit", "--config", str(path)]) == 2


# ── measured-data import ────────────────────────────────────────────────


def test_round_trip_is_lossless(tmp_path):
    rx = ReceiverParams(c_ret=1e-12, c_gb=5e-12, l=4.222e-3, r_l=1000.0)
    sweep = simulate_frequency_sweep(
        rx, GroundedTx(12.0, "pp"), BodyModel(c_b=150e-12), np.geomspace(1e5, 1e7, 40)
    )
    path = tmp_path / "dump.csv"
    path.write_text(sweep_to_table(sweep).to_csv(), encoding="utf-8")
    back = import_measured(path, axis="frequency")
    assert not back.power_only
    np.testing.assert_array_equal(back.values, sweep.values)
    np.testing.assert_array_equal(back.p_out_rms, sweep.p_out_rms)
    np.testing.assert_array_equal(back.v_o, sweep.v_o)


def test_power_only_import(tmp_path):
    path = tmp_path / "two_col.csv"
    path.write_text(
        "frequency[Hz],p_out_rms[W]\n1000000.0,0.001\n2000000.0,0.002\n", encoding="utf-8"
    )
    sweep = import_measured(path, axis="frequency")
    assert sweep.power_only
    assert sweep.p_out_rms.tolist() == [0.001, 0.002]


def test_import_rejects_duplicates(tmp_path):
    path = tmp_path / "dup.csv"
    path.write_text(
        "frequency[Hz],p_out_rms[W]\n1e6,0.001\n1e6,0.002\n2e6,0.003\n", encoding="utf-8"
    )
    with pytest.raises(DuplicateAxisError) as excinfo:
        import_measured(path, axis="frequency")
    assert excinfo.value.offenders == [1e6]


def test_import_reports_malformed_line_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "frequency[Hz],p_out_rms[W]\n1e6,0.001\noops,0.002\n", encoding="utf-8"
    )
    with pytest.raises(CsvFormatError) as excinfo:
        import_measured(path, axis="frequency")
    assert excinfo.value.line == 3
    assert "3" in str(excinfo.value)


def test_import_rejects_nonpositive_axis(tmp_path):
    path = tmp_path / "neg.csv"
    path.write_text(
        "frequency[Hz],p_out_rms[W]\n-1e6,0.001\n2e6,0.002\n", encoding="utf-8"
    )
    with pytest.raises(CsvFormatError):
        import_measured(path, axis="frequency")


def test_import_sorts_with_warning(tmp_path):
    path = tmp_path / "unsorted.csv"
    path.write_text(
        "frequency[Hz],p_out_rms[W]\n2e6,0.002\n1e6,0.001\n", encoding="utf-8"
    )
    with pytest.warns(UnsortedRowsWarning):
        sweep = import_measured(path, axis="frequency")
    assert sweep.values.tolist() == [1e6, 2e6]


def test_import_rejects_wrong_axis_header(tmp_path):
    path = tmp_path / "axis.csv"
    path.write_text("load[ohm],p_out_rms[W]\n100,0.1\n200,0.2\n", encoding="utf-8")
    with pytest.raises(CsvFormatError):
        import_measured(path, axis="frequency")


def test_every_sweep_command_reimports_cleanly(tmp_path):
    text = BASE_SCENARIO.replace("r_s = 0", "r_s = 1k")
    commands = {
        "sweep-freq": ("frequency", text),
        "sweep-load": ("load", text.replace("axis = frequency\nlo = 100k\nhi = 10M", "axis = load\nlo = 100\nhi = 10k")),
        "sweep-inductance": ("inductance", text.replace("axis = frequency\nlo = 100k\nhi = 10M", "axis = inductance\nlo = 0.1m\nhi = 10m")),
        "sweep-vin": ("input_voltage", text.replace("axis = frequency\nlo = 100k\nhi = 10M", "axis = input_voltage\nlo = 1\nhi = 12")),
    }
    for command, (axis, scenario_text) in commands.items():
        path = _scenario(tmp_path, scenario_text, name=f"{command}.scn")
        out = tmp_path / f"{command}.csv"
        assert main([command, "--config", str(path), "--points", "16", "--out", str(out)]) == 0
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            sweep = import_measured(out, axis=axis)
        assert len(sweep) == 16


# ── result table basics ─────────────────────────────────────────────────


def test_result_table_requires_rectangular_rows():
    with pytest.raises(ValueError):
        ResultTable(columns=["a", "b"], rows=[[1.0]])
    with pytest.raises(ValueError):
        ResultTable(columns=["a", "a"], rows=[])


def test_result_table_header_order_is_stable():
    table = ResultTable(columns=["x"], rows=[[1.0]], provenance={"config_sha256": "ff", "command": "c", "version": "v"})
    lines = table.to_csv().splitlines()
    assert lines[0] == "# config_sha256=ff"
    assert lines[1] == "# command=c"
    assert lines[2] == "# version=v"
