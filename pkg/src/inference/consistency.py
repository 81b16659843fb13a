"""
Finite-depth posterior-consistency diagnostics.

Each report combines three kinds of evidence about one joint:
- the singularity matrix: TV at depth n between the conditionals on disjoint
  depth-k parameter cylinders;
- the recovery experiment: how often the MAP estimate returns the sampled parameter word;
- concentration curves of the sup-posterior along sampled observations.

The verdict is a finite-depth summary, never a proof.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np

from src.config.settings import settings
from src.inference.bayes import PosteriorSlice, conditional, map_estimate, marginal_y
from src.measures.joint import JointMeasure
from src.measures.measure import sample, total_variation_at_depth
from src.measures.words import EMPTY, Word, check_word, ensure_depth, iter_partition
from src.utils.errors import PreconditionError
from src.utils.logger import get_logger
from src.utils.rationals import ExactModel, Rational

logger = get_logger(__name__)

Verdict = Literal["consistent-at-depth", "inconsistent-at-depth", "indeterminate"]

# Statements about ML-random sets have no finite check; they are covered by the equivalence
UNTESTED_STATEMENTS = [
    "conditional random sets of distinct parameters are disjoint",
    "every conditionally random observation determines a unique parameter",
]

CONCENTRATION_TRIALS = 3


class SingularityMatrix(ExactModel):
    param_depth: int
    sample_depth: int
    labels: List[str]
    excluded: List[str]
    entries: List[List[Rational]]

    @property
    def min_offdiagonal(self) -> Optional[Fraction]:
        """Smallest off-diagonal entry, or None with fewer than two labels."""
        values = [
            self.entries[i][j]
            for i in range(len(self.labels))
            for j in range(len(self.labels))
            if i != j
        ]
        return min(values) if values else None


class RecoveryTrial(ExactModel):
    trial: int
    y: str
    estimate: str
    recovered: bool


class RecoveryTable(ExactModel):
    param_depth: int
    sample_depth: int
    seed: int
    trials: List[RecoveryTrial]
    rate: Rational
    chance_level: Rational


class ConcentrationCurve(ExactModel):
    trial: int
    y: str
    values: List[Rational]


class ConsistencyReport(ExactModel):
    joint: Dict[str, Any]
    param_depth: int
    sample_depth: int
    epsilon: Rational
    recovery_threshold: Rational
    seed: int
    singularity_matrix: SingularityMatrix
    min_offdiagonal: Optional[Rational]
    recovery_table: RecoveryTable
    concentration_curves: List[ConcentrationCurve]
    untested_statements: List[str]
    verdict: Verdict


def singularity_matrix(joint: JointMeasure, k: int, n: int) -> SingularityMatrix:
    """
    TV_n between the conditionals on every pair of positive-mass depth-k parameter cylinders.

    Args:
        joint (JointMeasure): The joint.
        k (int): Parameter depth.
        n (int): Observation depth of the total variation.

    Returns:
        SingularityMatrix: Symmetric with zero diagonal; zero-mass cylinders are
        listed under ``excluded``.
    """
    ensure_depth(k)
    labels: List[Word] = []
    excluded: List[Word] = []
    for y in iter_partition(k):
        (labels if joint.mass2(EMPTY, y) > 0 else excluded).append(y)
    slices = [conditional(joint, y) for y in labels]
    size = len(labels)
    entries = [[Fraction(0)] * size for _ in range(size)]
    for i in range(size):
        for j in range(i + 1, size):
            value = total_variation_at_depth(slices[i], slices[j], n)
            entries[i][j] = entries[j][i] = value
    logger.info(
        f"Singularity matrix at k={k}, n={n}: {size} cylinders, {len(excluded)} excluded"
    )
    return SingularityMatrix(
        param_depth=k, sample_depth=n, labels=labels, excluded=excluded, entries=entries
    )


def _trial_seeds(seed: int, trial: int) -> Tuple[int, int]:
    state = np.random.SeedSequence([seed, trial]).generate_state(2)
    return int(state[0]), int(state[1])


def _draw(joint: JointMeasure, k: int, n: int, seed: int, trial: int) -> Tuple[Word, Word]:
    y_seed, x_seed = _trial_seeds(seed, trial)
    y = sample(marginal_y(joint), k, y_seed)
    x = sample(conditional(joint, y), n, x_seed)
    return y, x


def recovery_experiment(
    joint: JointMeasure, k: int, n: int, trials: int, seed: int
) -> RecoveryTable:
    """
    Sample y ~ P_Y at length k, then x ~ P(·|y) at length n, and check map_estimate(x) == y.

    Trial t uses seeds derived from SeedSequence([seed, t]), so the table does
    not depend on the order in which trials run.

    Args:
        joint (JointMeasure): The joint.
        k (int): Parameter depth.
        n (int): Observation length.
        trials (int): Number of trials.
        seed (int): Master seed.

    Returns:
        RecoveryTable: Per-trial outcomes and the exact recovery rate.
    """
    if trials < 1:
        raise PreconditionError(f"trials must be positive, got {trials}")
    ensure_depth(k)
    rows: List[RecoveryTrial] = []
    for t in range(trials):
        y, x = _draw(joint, k, n, seed, t)
        estimate = map_estimate(joint, x, k)
        rows.append(RecoveryTrial(trial=t, y=y, estimate=estimate, recovered=estimate == y))
    rate = Fraction(sum(row.recovered for row in rows), trials)
    logger.info(f"Recovery at k={k}, n={n}: {rate} over {trials} trials")
    return RecoveryTable(
        param_depth=k,
        sample_depth=n,
        seed=seed,
        trials=rows,
        rate=rate,
        chance_level=Fraction(1, 1 << k),
    )


def concentration_curve(joint: JointMeasure, x: Word, k: int) -> List[Fraction]:
    """
    sup_{|y|=k} P(y | x[:i]) for i = 0..l(x).

    Args:
        joint (JointMeasure): The joint.
        x (Word): Observation word.
        k (int): Parameter depth.

    Returns:
        List[Fraction]: l(x) + 1 values; they tend to 1 when the posterior concentrates.
    """
    check_word(x)
    ensure_depth(k)
    params = list(iter_partition(k))
    curve = []
    for i in range(len(x) + 1):
        post = PosteriorSlice(joint, x[:i])
        curve.append(max(post.mass(y) for y in params))
    return curve


def decide_verdict(
    min_offdiagonal: Optional[Fraction],
    rate: Fraction,
    epsilon: Fraction,
    recovery_threshold: Fraction,
) -> Verdict:
    """
    consistent-at-depth when separation is at least 1 − ε and recovery meets the
    threshold; inconsistent-at-depth when some pair is separated by at most ε.
    A vacuous matrix leaves the decision to recovery alone.
    """
    if min_offdiagonal is None:
        return "consistent-at-depth" if rate >= recovery_threshold else "indeterminate"
    if min_offdiagonal <= epsilon:
        return "inconsistent-at-depth"
    if min_offdiagonal >= 1 - epsilon and rate >= recovery_threshold:
        return "consistent-at-depth"
    return "indeterminate"


def consistency_verdict(
    joint: JointMeasure,
    k: int,
    n: int,
    epsilon: Optional[Fraction] = None,
    recovery_threshold: Optional[Fraction] = None,
    trials: int = 200,
    seed: int = 0,
    sample_depth: Optional[int] = None,
) -> ConsistencyReport:
    """
    Run every finite surrogate and combine them into a verdict.

    Args:
        joint (JointMeasure): The joint.
        k (int): Parameter depth.
        n (int): Depth of the singularity matrix.
        epsilon (Optional[Fraction]): Separation tolerance; defaults to settings.
        recovery_threshold (Optional[Fraction]): Minimal recovery rate; defaults to settings.
        trials (int): Recovery trials.
        seed (int): Master seed.
        sample_depth (Optional[int]): Observation length for recovery; defaults to n.

    Returns:
        ConsistencyReport: The full report with thresholds in its header.
    """
    epsilon = settings.epsilon_value if epsilon is None else epsilon
    threshold = (
        settings.recovery_threshold_value if recovery_threshold is None else recovery_threshold
    )
    if not 0 <= epsilon < Fraction(1, 2):
        raise PreconditionError(f"epsilon must lie in [0, 1/2), got {epsilon}")
    sample_depth = n if sample_depth is None else sample_depth

    matrix = singularity_matrix(joint, k, n)
    recovery = recovery_experiment(joint, k, sample_depth, trials, seed)
    curves = []
    for t in range(min(trials, CONCENTRATION_TRIALS)):
        y, x = _draw(joint, k, sample_depth, seed, t)
        curves.append(ConcentrationCurve(trial=t, y=y, values=concentration_curve(joint, x, k)))

    min_off = matrix.min_offdiagonal
    verdict = decide_verdict(min_off, recovery.rate, epsilon, threshold)
    logger.info(f"Verdict {verdict}: min off-diagonal {min_off}, recovery {recovery.rate}")
    return ConsistencyReport(
        joint=joint.describe(),
        param_depth=k,
        sample_depth=sample_depth,
        epsilon=epsilon,
        recovery_threshold=threshold,
        seed=seed,
        singularity_matrix=matrix,
        min_offdiagonal=min_off,
        recovery_table=recovery,
        concentration_curves=curves,
        untested_statements=UNTESTED_STATEMENTS,
        verdict=verdict,
    )
