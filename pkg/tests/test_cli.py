import json
import math

import pytest

from tailconc.cli import main

PARETO = '{"kind": "pareto", "xi": 0.5}'
PARETO125 = '{"kind": "pareto", "xi": 1.25}'
BURR = '{"kind": "burr", "tau": 0.25, "kappa": 8.0}'
GANDH = '{"kind": "gandh", "a": 0.0, "b": 1.0, "g": 2.0, "h": 0.5}'

CURVE_HEADER = "alpha,c_emp,c_emp_lo,c_emp_hi,c1,c2,c_oracle"
DIAG_HEADER = "kind,x,value,reference,ratio"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    return header, rows


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0
    assert out.startswith("tailconc ")


def test_missing_subcommand(capsys):
    code, _, err = run(capsys)
    assert code == 1
    assert "subcommand is required" in err


def test_malformed_model_json(capsys):
    code, _, err = run(capsys, "info", "--model", "{oops", "--n", "2")
    assert code == 1
    assert "not valid JSON" in err


def test_non_object_model_json(capsys):
    code, _, err = run(capsys, "info", "--model", "[1, 2]", "--n", "2")
    assert code == 1
    assert "JSON object" in err


def test_unknown_model_kind(capsys):
    code, _, err = run(capsys, "info", "--model", '{"kind": "cauchy"}', "--n", "2")
    assert code == 2
    assert "domain error" in err


def test_missing_required_n(capsys):
    code, _, err = run(capsys, "info", "--model", PARETO)
    assert code == 1


def test_curve_csv_schema(capsys):
    code, out, err = run(
        capsys,
        "curve", "--model", PARETO, "--n", "2",
        "--alpha-min", "0.9", "--alpha-max", "0.99", "--points", "5",
        "--samples", "20000", "--batches", "4",
    )
    assert code == 0
    header, rows = parse_csv(out)
    assert ",".join(header) == CURVE_HEADER
    assert len(rows) == 5
    for row in rows:
        assert 0.9 <= float(row["alpha"]) <= 0.99
        assert float(row["c_emp_lo"]) <= float(row["c_emp"]) <= float(row["c_emp_hi"])
        assert float(row["c1"]) == pytest.approx(2.0 ** -0.5, rel=1e-15)
        assert float(row["c2"]) > 0.0
        assert row["c_oracle"] == ""
    # regime classification goes to stderr, not into the artifact
    assert "regime: fast" in err
    assert "degenerate second-order correction: no" in err


def test_curve_without_simulation(capsys):
    code, out, _ = run(
        capsys,
        "curve", "--model", PARETO, "--n", "2",
        "--alpha-min", "0.9", "--alpha-max", "0.99", "--points", "3",
        "--samples", "0",
    )
    assert code == 0
    _, rows = parse_csv(out)
    for row in rows:
        assert row["c_emp"] == row["c_emp_lo"] == row["c_emp_hi"] == ""
        assert row["c1"] != "" and row["c2"] != ""


def test_curve_byte_identical_across_workers(capsys):
    argv = [
        "curve", "--model", PARETO, "--n", "2",
        "--alpha-min", "0.9", "--alpha-max", "0.99", "--points", "4",
        "--samples", "40000", "--batches", "8",
    ]
    code1, out1, _ = run(capsys, *argv, "--workers", "1")
    code2, out2, _ = run(capsys, *argv, "--workers", "3")
    assert code1 == code2 == 0
    assert out1 == out2


def test_curve_oracle_column(capsys):
    from tailconc.convolution import oracle_concentration
    from tailconc.models import Pareto

    code, out, _ = run(
        capsys,
        "curve", "--model", PARETO, "--n", "2",
        "--alpha-min", "0.9", "--alpha-max", "0.99", "--points", "3",
        "--samples", "0", "--oracle",
    )
    assert code == 0
    _, rows = parse_csv(out)
    for row in rows:
        want = oracle_concentration(Pareto(xi=0.5), 2, float(row["alpha"]))
        assert float(row["c_oracle"]) == pytest.approx(want, rel=1e-9)


def test_curve_json_format(capsys):
    code, out, _ = run(
        capsys,
        "curve", "--model", PARETO, "--n", "2",
        "--alpha-min", "0.9", "--alpha-max", "0.99", "--points", "3",
        "--samples", "6000", "--batches", "3", "--seed", "5",
        "--format", "json",
    )
    assert code == 0
    payload = json.loads(out)
    assert set(payload) == {"metadata", "columns"}
    cols = payload["columns"]
    assert set(cols) == set(CURVE_HEADER.split(","))
    assert len(cols["alpha"]) == 3
    assert cols["c_oracle"] == [None, None, None]
    meta = payload["metadata"]
    assert meta["model"] == {"kind": "pareto", "xi": 0.5}
    assert meta["n"] == 2
    assert meta["regime"] == "fast"
    assert meta["samples"] == 6000
    assert meta["batches"] == 3
    assert meta["seed"] == 5
    assert meta["workers"] == 1
    assert meta["denominator"] == "empirical"
    assert "tailconc" in meta["versions"]


def test_curve_json_without_simulation_uses_nulls(capsys):
    code, out, _ = run(
        capsys,
        "curve", "--model", PARETO, "--n", "2",
        "--alpha-min", "0.9", "--alpha-max", "0.99", "--points", "2",
        "--samples", "0", "--format", "json",
    )
    assert code == 0
    cols = json.loads(out)["columns"]
    assert cols["c_emp"] == [None, None]
    assert all(v is not None for v in cols["c2"])


def test_curve_gandh_c2_nan_below_half_is_empty(capsys):
    code, out, _ = run(
        capsys,
        "curve", "--model", GANDH, "--n", "2",
        "--alpha-min", "0.3", "--alpha-max", "0.9", "--points", "3",
        "--samples", "0",
    )
    assert code == 0
    _, rows = parse_csv(out)
    assert rows[0]["c2"] == ""  # alpha = 0.3: closed form undefined
    assert rows[-1]["c2"] != ""


def test_crossover_text(capsys):
    code, out, _ = run(capsys, "crossover", "--model", GANDH, "--n", "2")
    assert code == 0
    assert "analytic crossover alpha: 0.999591" in out


def test_crossover_none_found(capsys):
    code, out, _ = run(capsys, "crossover", "--model", PARETO125, "--n", "2")
    assert code == 0
    assert "none found" in out


def test_crossover_with_simulation(capsys):
    code, out, _ = run(
        capsys,
        "crossover", "--model", PARETO, "--n", "2",
        "--alpha-min", "0.8", "--alpha-max", "0.99", "--points", "12",
        "--samples", "120000", "--batches", "4",
    )
    assert code == 0
    assert "empirical crossover bracket: [" in out
    assert "uncertainty band straddles one" in out


def test_crossover_json(capsys):
    code, out, _ = run(
        capsys, "crossover", "--model", GANDH, "--n", "2", "--format", "json"
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["analytic_crossover"] == pytest.approx(0.9995913, abs=1e-6)
    assert payload["empirical_bracket"] is None


def test_diag_csv(capsys):
    code, out, _ = run(
        capsys,
        "diag", "--model", BURR, "--n", "2",
        "--alpha-min", "0.99", "--alpha-max", "0.9999", "--points", "3",
    )
    assert code == 0
    header, rows = parse_csv(out)
    assert ",".join(header) == DIAG_HEADER
    assert len(rows) == 6
    kinds = [row["kind"] for row in rows]
    assert kinds == ["tail_ratio_diag"] * 3 + ["auxiliary"] * 3
    for row in rows:
        assert row["value"] != ""
        # this model has Hall constants, so references are populated
        assert row["reference"] != ""
        assert row["ratio"] != ""


def test_diag_pareto_auxiliary_reference_empty(capsys):
    code, out, _ = run(
        capsys,
        "diag", "--model", PARETO, "--n", "2",
        "--alpha-min", "0.99", "--alpha-max", "0.9999", "--points", "2",
    )
    assert code == 0
    _, rows = parse_csv(out)
    aux = [row for row in rows if row["kind"] == "auxiliary"]
    assert aux and all(row["reference"] == "" for row in aux)
    assert all(row["value"] == "0" for row in aux)


def test_info_text(capsys):
    code, out, _ = run(capsys, "info", "--model", PARETO125, "--n", "2")
    assert code == 0
    assert "kind: pareto" in out
    assert "mean: infinite" in out
    assert "regime: fast" in out
    assert "approach: from_above" in out
    assert "analytic_crossover: none found" in out


def test_info_boundary_reports_balance(capsys):
    code, out, _ = run(
        capsys, "info", "--model", '{"kind": "burr", "tau": 1.0, "kappa": 2.0}',
        "--n", "2",
    )
    assert code == 0
    assert "regime: boundary" in out
    balance_line = next(l for l in out.splitlines() if l.startswith("boundary_balance:"))
    assert float(balance_line.split(":")[1]) == pytest.approx(2.0, rel=1e-10)


def test_info_json(capsys):
    code, out, _ = run(
        capsys, "info", "--model", GANDH, "--n", "2", "--format", "json"
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["regime"] == "slow"
    assert payload["tail_index"] == 0.5
    assert payload["second_order_index"] == 0.0
    assert payload["first_order_limit"] == pytest.approx(2.0 ** -0.5)
    assert payload["approach"] == "from_above"
    assert payload["correction_slope_limit"] == "-inf"
    assert payload["analytic_crossover"] == pytest.approx(0.9995913, abs=1e-6)


def test_out_file(capsys, tmp_path):
    target = tmp_path / "curve.csv"
    code, out, _ = run(
        capsys,
        "curve", "--model", PARETO, "--n", "2",
        "--alpha-min", "0.9", "--alpha-max", "0.99", "--points", "2",
        "--samples", "0", "--out", str(target),
    )
    assert code == 0
    assert out == ""
    text = target.read_text(encoding="utf-8")
    assert text.splitlines()[0] == CURVE_HEADER


@pytest.mark.parametrize(
    "argv",
    [
        # inverted level range
        ["curve", "--model", PARETO, "--n", "2", "--alpha-min", "0.99",
         "--alpha-max", "0.9", "--samples", "0"],
        # level outside (0, 1)
        ["curve", "--model", PARETO, "--n", "2", "--alpha-max", "1.0",
         "--samples", "0"],
        # too few points
        ["curve", "--model", PARETO, "--n", "2", "--points", "1", "--samples", "0"],
        # bad worker count
        ["curve", "--model", PARETO, "--n", "2", "--samples", "1000",
         "--workers", "0"],
        # negative sample count
        ["curve", "--model", PARETO, "--n", "2", "--samples", "-5"],
    ],
)
def test_usage_errors_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert "error" in err


@pytest.mark.parametrize(
    "argv",
    [
        # batches must divide samples (simulation-config domain error)
        ["curve", "--model", PARETO, "--n", "2", "--samples", "1001",
         "--batches", "4"],
        # model parameters outside the domain
        ["info", "--model", '{"kind": "pareto", "xi": -1.0}', "--n", "2"],
        # n outside the convolution oracle's supported range
        ["diag", "--model", PARETO, "--n", "99", "--points", "2"],
        ["curve", "--model", PARETO, "--n", "99", "--samples", "0", "--oracle",
         "--points", "2"],
    ],
)
def test_domain_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2


def test_precision_error_exits_three(capsys):
    code, _, err = run(
        capsys,
        "curve", "--model", PARETO, "--n", "2",
        "--alpha-min", "0.9", "--alpha-max", "0.99", "--points", "2",
        "--samples", "0", "--oracle", "--oracle-tol", "1e-16",
    )
    assert code == 3
    assert "precision" in err


def test_curve_values_are_seventeen_digit_reals(capsys):
    code, out, _ = run(
        capsys,
        "curve", "--model", PARETO, "--n", "2",
        "--alpha-min", "0.9", "--alpha-max", "0.99", "--points", "2",
        "--samples", "2000", "--batches", "2",
    )
    assert code == 0
    _, rows = parse_csv(out)
    for row in rows:
        for key in ("alpha", "c_emp", "c1", "c2"):
            value = float(row[key])
            assert math.isfinite(value)
            # 17 significant digits round-trip doubles exactly
            assert f"{value:.17g}" == row[key]
