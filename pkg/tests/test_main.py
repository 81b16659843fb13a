import json

import pytest

from src.config.settings import settings
from src.main import EXIT_OK, EXIT_PRECONDITION, EXIT_SCHEMA, run

COUNTEREXAMPLE = json.dumps(
    {"type": "counterexample", "approximants": ["10", "1010", "101010"], "alpha": "2/3"}
)
BERNOULLI_THIRD = json.dumps({"type": "bernoulli", "theta": "1/3"})


def invoke(capsys, *argv):
    code = run(list(argv))
    return code, capsys.readouterr().out


def invoke_json(capsys, *argv):
    code, out = invoke(capsys, *argv)
    assert code == EXIT_OK, out
    return json.loads(out)


def test_eval_measure(capsys):
    payload = invoke_json(capsys, "eval", "--measure", BERNOULLI_THIRD, "--x", "101")
    assert payload["mass"] == "2/27"
    assert payload["schema_version"] == "1"


def test_eval_joint(capsys):
    payload = invoke_json(capsys, "eval", "--joint", "beta_bernoulli", "--x", "11", "--y", "1")
    assert payload["mass"] == "7/24"


def test_marginal_and_conditional(capsys):
    payload = invoke_json(
        capsys, "marginal", "--joint", COUNTEREXAMPLE, "--axis", "y", "--word", "11"
    )
    assert payload["mass"] == "1/2"
    payload = invoke_json(
        capsys, "conditional", "--joint", "beta_bernoulli", "--y", "1", "--x", "11"
    )
    assert payload["probability"] == "7/12"


def test_martingale_reports_the_limit(capsys):
    payload = invoke_json(
        capsys,
        "martingale",
        "--joint",
        "beta_bernoulli",
        "--x",
        "1",
        "--y-target",
        "(1)",
        "--n-max",
        "3",
    )
    assert [row["value"] for row in payload["sequence"]] == ["1/2", "3/4", "7/8", "15/16"]
    assert payload["limit"] == "1/1"


def test_mixture_check_is_exactly_zero(capsys):
    payload = invoke_json(
        capsys, "mixture-check", "--joint", "beta_bernoulli", "--x", "101", "--n", "6"
    )
    assert payload["residual"] == "0/1"


def test_tv_curve_csv(capsys):
    code, out = invoke(
        capsys, "tv-curve", "--p", "uniform", "--q", BERNOULLI_THIRD, "--n-max", "3", "--format", "csv"
    )
    assert code == EXIT_OK
    lines = out.strip().split("\n")
    assert lines[0] == "n,tv,tv_decimal"
    assert lines[1].startswith("0,0/1,")
    assert len(lines) == 5


def test_posterior_and_map(capsys):
    payload = invoke_json(capsys, "posterior", "--joint", "beta_bernoulli", "--x", "111", "--k", "1")
    assert payload["map_estimate"] == "1"
    assert payload["posterior"][1] == {"y": "1", "posterior": "15/16"}


def test_consistency_report_on_the_product(capsys):
    payload = invoke_json(
        capsys,
        "consistency-report",
        "--joint",
        "product_uniform",
        "--param-depth",
        "1",
        "--sample-depth",
        "4",
        "--trials",
        "5",
        "--seed",
        "0",
    )
    assert payload["verdict"] == "inconsistent-at-depth"
    assert payload["min_offdiagonal"] == "0/1"


def test_consistency_report_is_deterministic(capsys):
    argv = [
        "consistency-report",
        "--joint",
        COUNTEREXAMPLE,
        "--param-depth",
        "2",
        "--sample-depth",
        "8",
        "--trials",
        "10",
        "--seed",
        "42",
    ]
    first = invoke(capsys, *argv)
    second = invoke(capsys, *argv)
    assert first == second
    assert json.loads(first[1])["verdict"] == "consistent-at-depth"


def test_sample_is_seeded(capsys):
    argv = ["sample", "--measure", BERNOULLI_THIRD, "--length", "40", "--seed", "9"]
    first = invoke_json(capsys, *argv)
    second = invoke_json(capsys, *argv)
    assert first["word"] == second["word"]
    assert len(first["word"]) == 40


def test_model_validate(capsys):
    payload = invoke_json(capsys, "model", "validate", "--spec", COUNTEREXAMPLE, "--depth", "4")
    assert payload["ok"] is True
    table = json.dumps({"type": "table", "masses": {"": "1", "0": "1/2", "1": "1/3"}})
    payload = invoke_json(capsys, "model", "validate", "--spec", table, "--depth", "1")
    assert payload["ok"] is False


def test_counterexample_verify_tail(capsys):
    payload = invoke_json(
        capsys,
        "counterexample",
        "verify",
        "--alpha",
        "2/3",
        "--approximants",
        "10,1010,101010,10101010",
    )
    assert payload["ok"] is True
    tail = payload["report"]["tail"]
    assert [row["mass"] for row in tail] == ["1/1", "1/2", "3/8", "11/32", "43/128"]
    assert payload["report"]["tail_limit"] == "1/3"


def test_test_commands(capsys, tmp_path):
    spec = tmp_path / "zeros.json"
    spec.write_text(json.dumps({"levels": {str(n): ["0" * (n + 1)] for n in range(1, 6)}}))
    payload = invoke_json(capsys, "test", "validate", "--test", str(spec), "--measure", "uniform")
    assert payload["ok"] is True
    payload = invoke_json(
        capsys,
        "test",
        "transfer",
        "--test",
        str(spec),
        "--joint",
        "product_uniform",
        "--M",
        "1",
        "--k-max",
        "3",
    )
    assert payload["ok"] is True
    payload = invoke_json(capsys, "test", "diagonal", "--max-level", "4")
    assert payload["ok"] is True
    payload = invoke_json(
        capsys,
        "test",
        "counterexample",
        "--alpha",
        "2/3",
        "--approximants",
        "10,1010,101010,10101010",
        "--max-level",
        "4",
        "--depth",
        "10",
    )
    assert payload["ok"] is True


def test_deficiency_against_a_pool(capsys):
    pool = json.dumps(
        {
            "entries": [
                {"weight": "1/2", "model": {"type": "uniform"}},
                {"weight": "1/2", "model": {"type": "bernoulli", "theta": "1/10"}},
            ]
        }
    )
    payload = invoke_json(
        capsys, "test", "deficiency", "--x", "0" * 100, "--pool", pool, "--measure", "uniform"
    )
    assert payload["result"]["kind"] == "finite"
    numerator, denominator = map(int, payload["result"]["value"].split("/"))
    assert numerator / denominator > 50


def test_out_writes_a_file(capsys, tmp_path):
    target = tmp_path / "reports" / "eval.json"
    code, out = invoke(capsys, "eval", "--measure", "uniform", "--x", "01", "--out", str(target))
    assert code == EXIT_OK
    assert out == ""
    assert json.loads(target.read_text())["mass"] == "1/4"


@pytest.mark.parametrize(
    "argv",
    [
        ["eval", "--measure", '{"type": "bernoulli", "theta":', "--x", "1"],
        ["eval", "--measure", "uniform", "--x", "012"],
        ["eval", "--measure", '{"type": "gaussian"}', "--x", "1"],
        ["eval", "--measure", '{"type": "bernoulli", "theta": 0.5}', "--x", "1"],
        ["eval", "--measure", '{"type": "bernoulli", "theta": "1e-2"}', "--x", "1"],
        [
            "consistency-report",
            "--joint",
            "product_uniform",
            "--param-depth",
            "1",
            "--sample-depth",
            "2",
            "--epsilon",
            "0.5",
            "--seed",
            "0",
        ],
        ["eval", "--measure", "no-such-file.json", "--x", "1"],
        ["eval", "--x", "1"],
        ["martingale", "--joint", "beta_bernoulli", "--x", "1", "--y-target", "1(", "--n-max", "2"],
    ],
)
def test_malformed_input_exits_with_one(argv, capsys):
    assert run(argv) == EXIT_SCHEMA


def test_null_conditioning_exits_with_two(capsys):
    argv = ["conditional", "--joint", COUNTEREXAMPLE, "--y", "0", "--x", "1"]
    assert run(argv) == EXIT_PRECONDITION


def test_depth_overflow_exits_with_two(capsys, monkeypatch):
    monkeypatch.setattr(settings, "depth_budget", 4)
    assert run(["eval", "--measure", "uniform", "--x", "00000"]) == EXIT_PRECONDITION
