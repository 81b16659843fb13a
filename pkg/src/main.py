import json
import os
import sys

# Ensure the project root is on sys.path so `python src/main.py` works as well
# as `uv run src/main.py` or running from within an activated virtual env.
_project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if _project_root not in sys.path:
    sys.path.insert(0, _project_root)

from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

import click
from pydantic import ValidationError

from src.config.settings import settings
from src.inference.bayes import (
    conditional,
    limit_conditional,
    map_estimate,
    marginal_x,
    marginal_y,
    martingale_sequence,
    mixture_residual,
    posterior,
)
from src.inference.consistency import consistency_verdict
from src.measures.joint import (
    JointMeasure,
    evaluate2,
    validate_joint_additivity,
    verify_counterexample,
)
from src.measures.measure import (
    evaluate,
    sample,
    total_variation_at_depth,
    validate_additivity,
)
from src.measures.words import PeriodicSequence, check_word, ensure_depth, iter_partition
from src.models.factory import load_any, load_joint, load_measure, load_pool, load_test
from src.models.specs import CounterexampleSpec
from src.randomness.mltest import (
    counterexample_test_report,
    deficiency,
    deficiency_profile,
    diagonal_family,
    transfer_report,
    validate_product_test,
    validate_test,
)
from src.storage.reports import render_csv, render_json, write_report
from src.utils.errors import CantorBayesError, SchemaError
from src.utils.logger import get_logger
from src.utils.rationals import parse_rational

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_PRECONDITION = 2


class RationalParam(click.ParamType):
    name = "p/q"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> Fraction:
        try:
            return parse_rational(value)
        except SchemaError as e:
            self.fail(str(e), param, ctx)


class WordParam(click.ParamType):
    name = "word"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> str:
        try:
            return check_word(value)
        except SchemaError as e:
            self.fail(str(e), param, ctx)


class SequenceParam(click.ParamType):
    name = "head(repeat)"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> PeriodicSequence:
        if isinstance(value, PeriodicSequence):
            return value
        try:
            return PeriodicSequence.parse(value)
        except SchemaError as e:
            self.fail(str(e), param, ctx)


RATIONAL = RationalParam()
WORD = WordParam()
SEQUENCE = SequenceParam()


def output_options(func):
    func = click.option("--out", "out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout).")(func)
    func = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)(func)
    return func


def emit(
    payload: Any,
    fmt: str,
    out: Optional[str],
    columns: Optional[Sequence[str]] = None,
    rows: Optional[Sequence[Dict[str, Any]]] = None,
) -> None:
    """Render a report as JSON, or its table as CSV, and write it."""
    if fmt == "csv":
        if columns is None or rows is None:
            raise click.UsageError("This command has no CSV form")
        text = render_csv(columns, rows)
    else:
        text = render_json(payload)
    write_report(text, out)


def counterexample_from_flags(alpha: Fraction, approximants: str) -> CounterexampleSpec:
    words = [w.strip() for w in approximants.split(",") if w.strip()]
    return CounterexampleSpec(approximants=words, alpha=alpha)


@click.group()
def cli() -> None:
    """Exact-rational measures on Cantor space: conditioning, consistency and finite tests."""


# ---------------------------------------------------------------------------
# Measures and joints
# ---------------------------------------------------------------------------


@cli.group()
def model() -> None:
    """Model specifications."""


@model.command("validate")
@click.option("--spec", "source", required=True, help="Measure or joint spec: path, inline JSON or shorthand.")
@click.option("--depth", type=int, default=8, show_default=True)
@output_options
def model_validate(source: str, depth: int, fmt: str, out: Optional[str]) -> None:
    """Check normalization, nonnegativity and additivity up to a depth."""
    target = load_any(source)
    if isinstance(target, JointMeasure):
        report = validate_joint_additivity(target, depth)
        rows = [v.model_dump() for v in report.violations]
        columns = ["x", "y", "axis", "mass", "children_sum"]
    else:
        report = validate_additivity(target, depth)
        rows = [v.model_dump() for v in report.violations]
        columns = ["word", "mass", "children_sum"]
    logger.info(f"Validation {'passed' if report.ok else 'failed'} at depth {depth}")
    emit({"ok": report.ok, "report": report}, fmt, out, columns, rows)


@cli.command("eval")
@click.option("--measure", "measure_source", default=None)
@click.option("--joint", "joint_source", default=None)
@click.option("--x", "x", type=WORD, required=True)
@click.option("--y", "y", type=WORD, default=None, help="Parameter word (joints only).")
@output_options
def eval_command(
    measure_source: Optional[str], joint_source: Optional[str], x: str, y: Optional[str], fmt: str, out: Optional[str]
) -> None:
    """Exact cylinder mass P(x), or P(x, y) for a joint."""
    if (measure_source is None) == (joint_source is None):
        raise click.UsageError("Give exactly one of --measure and --joint")
    if joint_source is not None:
        joint = load_joint(joint_source)
        y = y or ""
        value = evaluate2(joint, x, y)
        payload = {"joint": joint.describe(), "x": x, "y": y, "mass": value}
    else:
        measure = load_measure(measure_source)
        value = evaluate(measure, x)
        payload = {"measure": measure.describe(), "x": x, "mass": value}
    emit(payload, fmt, out, ["x", "mass"], [{"x": x, "mass": value}])


@cli.command("marginal")
@click.option("--joint", "joint_source", required=True)
@click.option("--axis", type=click.Choice(["x", "y"]), default="x", show_default=True)
@click.option("--word", type=WORD, required=True)
@output_options
def marginal_command(joint_source: str, axis: str, word: str, fmt: str, out: Optional[str]) -> None:
    """Marginal mass of a cylinder on either axis."""
    joint = load_joint(joint_source)
    measure = marginal_x(joint) if axis == "x" else marginal_y(joint)
    value = evaluate(measure, word)
    emit(
        {"joint": joint.describe(), "axis": axis, "word": word, "mass": value},
        fmt,
        out,
        ["word", "mass"],
        [{"word": word, "mass": value}],
    )


@cli.command("conditional")
@click.option("--joint", "joint_source", required=True)
@click.option("--y", "y", type=WORD, required=True)
@click.option("--x", "x", type=WORD, required=True)
@output_options
def conditional_command(joint_source: str, y: str, x: str, fmt: str, out: Optional[str]) -> None:
    """P(x | y) on cylinders."""
    joint = load_joint(joint_source)
    ensure_depth(max(len(x), len(y)))
    value = conditional(joint, y).mass(x)
    emit(
        {"joint": joint.describe(), "x": x, "y": y, "probability": value},
        fmt,
        out,
        ["x", "y", "probability"],
        [{"x": x, "y": y, "probability": value}],
    )


@cli.command("martingale")
@click.option("--joint", "joint_source", required=True)
@click.option("--x", "x", type=WORD, required=True)
@click.option("--y-target", type=SEQUENCE, required=True, help="Eventually periodic target, e.g. '(1)' or '11(0)'.")
@click.option("--n-max", type=int, required=True)
@output_options
def martingale_command(
    joint_source: str, x: str, y_target: PeriodicSequence, n_max: int, fmt: str, out: Optional[str]
) -> None:
    """P(x | y_target[:i]) for i = 0..n_max, with the exact limit where known."""
    joint = load_joint(joint_source)
    values = martingale_sequence(joint, x, y_target, n_max)
    rows = [{"i": i, "prefix": y_target.prefix(i), "value": v} for i, v in enumerate(values)]
    try:
        limit = limit_conditional(joint, y_target).mass(x)
    except CantorBayesError as e:
        logger.info(f"No closed-form limit: {e}")
        limit = None
    emit(
        {"joint": joint.describe(), "x": x, "y_target": str(y_target), "sequence": rows, "limit": limit},
        fmt,
        out,
        ["i", "prefix", "value"],
        rows,
    )


@cli.command("mixture-check")
@click.option("--joint", "joint_source", required=True)
@click.option("--x", "x", type=WORD, required=True)
@click.option("--n", "n", type=int, required=True)
@output_options
def mixture_check_command(joint_source: str, x: str, n: int, fmt: str, out: Optional[str]) -> None:
    """P_X(x) − Σ_{|y|=n} P(x, y); exactly zero for additive joints."""
    joint = load_joint(joint_source)
    residual = mixture_residual(joint, x, n)
    emit(
        {"joint": joint.describe(), "x": x, "n": n, "residual": residual},
        fmt,
        out,
        ["x", "n", "residual"],
        [{"x": x, "n": n, "residual": residual}],
    )


@cli.command("tv-curve")
@click.option("--p", "p_source", required=True)
@click.option("--q", "q_source", required=True)
@click.option("--n-max", type=int, required=True)
@output_options
def tv_curve_command(p_source: str, q_source: str, n_max: int, fmt: str, out: Optional[str]) -> None:
    """TV_n(p, q) for n = 0..n_max."""
    p, q = load_measure(p_source), load_measure(q_source)
    rows = [{"n": n, "tv": total_variation_at_depth(p, q, n)} for n in range(n_max + 1)]
    emit({"p": p.describe(), "q": q.describe(), "curve": rows}, fmt, out, ["n", "tv"], rows)


@cli.command("posterior")
@click.option("--joint", "joint_source", required=True)
@click.option("--x", "x", type=WORD, required=True)
@click.option("--k", "k", type=int, required=True)
@output_options
def posterior_command(joint_source: str, x: str, k: int, fmt: str, out: Optional[str]) -> None:
    """Posterior masses of all depth-k parameter cylinders and the MAP estimate."""
    joint = load_joint(joint_source)
    post = posterior(joint, x)
    rows = [{"y": y, "posterior": post.mass(y)} for y in iter_partition(k)]
    estimate = map_estimate(joint, x, k)
    emit(
        {"joint": joint.describe(), "x": x, "k": k, "posterior": rows, "map_estimate": estimate},
        fmt,
        out,
        ["y", "posterior"],
        rows,
    )


@cli.command("consistency-report")
@click.option("--joint", "joint_source", required=True)
@click.option("--param-depth", type=int, required=True)
@click.option("--sample-depth", type=int, required=True, help="Depth of the singularity matrix.")
@click.option("--recovery-depth", type=int, default=None, help="Observation length for recovery (default: sample depth).")
@click.option("--epsilon", type=RATIONAL, default=None)
@click.option("--recovery-threshold", type=RATIONAL, default=None)
@click.option("--trials", type=int, default=200, show_default=True)
@click.option("--seed", type=int, required=True)
@output_options
def consistency_report_command(
    joint_source: str,
    param_depth: int,
    sample_depth: int,
    recovery_depth: Optional[int],
    epsilon: Optional[Fraction],
    recovery_threshold: Optional[Fraction],
    trials: int,
    seed: int,
    fmt: str,
    out: Optional[str],
) -> None:
    """Finite-depth consistency verdict; the CSV form is the singularity matrix."""
    joint = load_joint(joint_source)
    report = consistency_verdict(
        joint,
        param_depth,
        sample_depth,
        epsilon=epsilon,
        recovery_threshold=recovery_threshold,
        trials=trials,
        seed=seed,
        sample_depth=recovery_depth,
    )
    matrix = report.singularity_matrix
    rows = [
        {"y": y, "z": z, "tv": matrix.entries[i][j]}
        for i, y in enumerate(matrix.labels)
        for j, z in enumerate(matrix.labels)
    ]
    emit(report, fmt, out, ["y", "z", "tv"], rows)


@cli.command("sample")
@click.option("--measure", "measure_source", required=True)
@click.option("--length", type=int, required=True)
@click.option("--seed", type=int, required=True)
@output_options
def sample_command(measure_source: str, length: int, seed: int, fmt: str, out: Optional[str]) -> None:
    """Seeded exact sampling of a word."""
    measure = load_measure(measure_source)
    word = sample(measure, length, seed)
    emit(
        {"measure": measure.describe(), "length": length, "seed": seed, "word": word},
        fmt,
        out,
        ["seed", "word"],
        [{"seed": seed, "word": word}],
    )


# ---------------------------------------------------------------------------
# Finite tests
# ---------------------------------------------------------------------------


@cli.group()
def test() -> None:
    """Finite Martin-Löf tests."""


@test.command("validate")
@click.option("--test", "test_source", required=True)
@click.option("--measure", "measure_source", required=True)
@output_options
def test_validate(test_source: str, measure_source: str, fmt: str, out: Optional[str]) -> None:
    """Nesting and mass bounds of a test under a measure."""
    report = validate_test(load_test(test_source), load_measure(measure_source))
    rows = [c.model_dump() for c in report.levels]
    emit({"ok": report.ok, "report": report}, fmt, out, ["level", "size", "mass", "bound", "within_bound"], rows)


@test.command("transfer")
@click.option("--test", "test_source", required=True)
@click.option("--joint", "joint_source", required=True)
@click.option("--y", "y", type=WORD, default="")
@click.option("--M", "M", type=int, required=True)
@click.option("--k-max", type=int, required=True)
@output_options
def test_transfer(test_source: str, joint_source: str, y: str, M: int, k_max: int, fmt: str, out: Optional[str]) -> None:
    """Transfer a marginal test to the conditional P(·|y)."""
    report = transfer_report(load_test(test_source), load_joint(joint_source), y, M, k_max)
    rows = [c.model_dump() for c in report.validation.levels]
    emit({"ok": report.ok, "report": report}, fmt, out, ["level", "size", "mass", "bound", "within_bound"], rows)


@test.command("counterexample")
@click.option("--alpha", type=RATIONAL, required=True)
@click.option("--approximants", required=True, help="Comma-separated words a_1,...,a_I.")
@click.option("--max-level", type=int, required=True)
@click.option("--depth", type=int, required=True)
@output_options
def test_counterexample(alpha: Fraction, approximants: str, max_level: int, depth: int, fmt: str, out: Optional[str]) -> None:
    """The explicit test covering alpha under the 1^∞ limit conditional."""
    report = counterexample_test_report(counterexample_from_flags(alpha, approximants), max_level, depth)
    rows = [level.model_dump() for level in report.levels]
    emit(
        {"ok": report.validation.ok, "report": report},
        fmt,
        out,
        ["n", "depth", "size", "limit_mass", "bound", "within_bound", "alpha_prefix_member"],
        rows,
    )


@test.command("diagonal")
@click.option("--max-level", type=int, required=True)
@click.option("--joint", "joint_source", default="product_uniform", show_default=True)
@output_options
def test_diagonal(max_level: int, joint_source: str, fmt: str, out: Optional[str]) -> None:
    """The product test covering the diagonal."""
    report = validate_product_test(diagonal_family(max_level), load_joint(joint_source))
    rows = [c.model_dump() for c in report.levels]
    emit({"ok": report.ok, "report": report}, fmt, out, ["level", "size", "mass", "bound", "within_bound"], rows)


@test.command("deficiency")
@click.option("--x", "x", type=WORD, required=True)
@click.option("--pool", "pool_source", required=True)
@click.option("--measure", "measure_source", default=None, help="Reference measure.")
@click.option("--joint", "joint_source", default=None, help="Profile against conditionals of a joint.")
@click.option("--y-target", type=SEQUENCE, default=None)
@click.option("--n-max", type=int, default=None)
@output_options
def test_deficiency(
    x: str,
    pool_source: str,
    measure_source: Optional[str],
    joint_source: Optional[str],
    y_target: Optional[PeriodicSequence],
    n_max: Optional[int],
    fmt: str,
    out: Optional[str],
) -> None:
    """Likelihood-ratio deficiency against a finite pool."""
    pool, weights = load_pool(pool_source)
    if measure_source is not None:
        result = deficiency(x, load_measure(measure_source), pool, weights)
        row = {"reference": "measure", "kind": result.kind, "value": result.value}
        emit({"result": result}, fmt, out, ["reference", "kind", "value"], [row])
        return
    if joint_source is None or y_target is None or n_max is None:
        raise click.UsageError("Give --measure, or --joint with --y-target and --n-max")
    profile = deficiency_profile(load_joint(joint_source), x, y_target, n_max, pool, weights)
    rows = [
        {"reference": r.reference, "kind": r.result.kind, "value": r.result.value} for r in profile
    ]
    emit({"x": x, "y_target": str(y_target), "profile": profile}, fmt, out, ["reference", "kind", "value"], rows)


# ---------------------------------------------------------------------------
# Counterexample construction
# ---------------------------------------------------------------------------


@cli.group()
def counterexample() -> None:
    """The counterexample joint built from approximants of alpha."""


@counterexample.command("verify")
@click.option("--alpha", type=RATIONAL, required=True)
@click.option("--approximants", required=True, help="Comma-separated words a_1,...,a_I.")
@click.option("--marginal-depth", type=int, default=10, show_default=True)
@click.option("--clause-depth", type=int, default=6, show_default=True)
@output_options
def counterexample_verify(
    alpha: Fraction, approximants: str, marginal_depth: int, clause_depth: int, fmt: str, out: Optional[str]
) -> None:
    """P_Y(1^k) against 1 − r(a_{k−1}), the uniform X-marginal and the construction clauses."""
    report = verify_counterexample(counterexample_from_flags(alpha, approximants), marginal_depth, clause_depth)
    rows = [row.model_dump() for row in report.tail]
    emit({"ok": report.ok, "report": report}, fmt, out, ["k", "mass", "expected"], rows)


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line and map failures to exit codes.

    Args:
        argv (Optional[List[str]]): Arguments without the program name.

    Returns:
        int: 0 on success (verdicts are data), 1 for malformed input,
        2 for violated preconditions.
    """
    try:
        result = cli.main(args=argv, prog_name="cantor-bayes", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_SCHEMA
    except click.exceptions.Abort:
        logger.error("Aborted")
        return EXIT_SCHEMA
    except (SchemaError, ValidationError, json.JSONDecodeError) as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_SCHEMA
    except CantorBayesError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_PRECONDITION
    return result if isinstance(result, int) else EXIT_OK


def main() -> None:
    """
    Main entry point for the application.
    """
    logger.debug(f"Depth budget {settings.depth_budget}")
    sys.exit(run())


if __name__ == "__main__":
    main()
