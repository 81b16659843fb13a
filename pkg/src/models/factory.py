"""
Build measures, joints, tests and pools from their JSON specifications.

Spec arguments on the command line are a file path, an inline JSON document
or one of the shorthands in ``SHORTHANDS``.
"""

import json
import os
from fractions import Fraction
from typing import Any, Dict, List, Tuple, Union

from pydantic import TypeAdapter

from src.measures.joint import (
    JointMeasure,
    beta_bernoulli_joint,
    counterexample_joint,
    product_joint,
)
from src.measures.measure import (
    BernoulliMeasure,
    CylinderMeasure,
    IntervalUniformMeasure,
    MarkovMeasure,
    MixtureMeasure,
    PointMassMeasure,
    TableMeasure,
    UniformMeasure,
)
from src.measures.words import PeriodicSequence
from src.models.specs import (
    BernoulliSpec,
    BetaBernoulliJointSpec,
    CounterexampleSpec,
    FiniteTestSpec,
    IntervalSpec,
    JointSpec,
    MarkovSpec,
    MixtureSpec,
    ModelSpec,
    PointMassSpec,
    PoolSpec,
    ProductJointSpec,
    TableSpec,
    UniformSpec,
)
from src.randomness.mltest import FiniteTest
from src.utils.errors import SchemaError
from src.utils.logger import get_logger

logger = get_logger(__name__)

SHORTHANDS: Dict[str, Dict[str, Any]] = {
    "uniform": {"type": "uniform"},
    "beta_bernoulli": {"type": "beta_bernoulli"},
    "product_uniform": {"type": "product", "x": {"type": "uniform"}, "y": {"type": "uniform"}},
}

JOINT_TYPES = {"product", "beta_bernoulli", "counterexample"}

_model_adapter: TypeAdapter = TypeAdapter(ModelSpec)
_joint_adapter: TypeAdapter = TypeAdapter(JointSpec)


def load_document(source: str) -> Dict[str, Any]:
    """
    Read a JSON document from a path, an inline string or a shorthand.

    Args:
        source (str): The command-line argument.

    Returns:
        Dict[str, Any]: The parsed JSON object.

    Raises:
        SchemaError: If the document is not a JSON object.
        json.JSONDecodeError: If the text is not JSON.
    """
    if source in SHORTHANDS:
        return dict(SHORTHANDS[source])
    if source.lstrip().startswith("{"):
        document = json.loads(source)
    elif os.path.isfile(source):
        logger.debug(f"Reading spec file {source}")
        with open(source, "r", encoding="utf-8") as f:
            document = json.load(f)
    else:
        raise SchemaError(f"{source!r} is neither a spec file, inline JSON nor a known shorthand")
    if not isinstance(document, dict):
        raise SchemaError("A spec document must be a JSON object")
    return document


def parse_model_spec(document: Dict[str, Any]) -> ModelSpec:
    return _model_adapter.validate_python(document)


def parse_joint_spec(document: Dict[str, Any]) -> JointSpec:
    return _joint_adapter.validate_python(document)


def is_joint_document(document: Dict[str, Any]) -> bool:
    return document.get("type") in JOINT_TYPES


def build_measure(spec: ModelSpec) -> CylinderMeasure:
    """
    Instantiate the measure a spec describes.

    Args:
        spec (ModelSpec): A validated model spec.

    Returns:
        CylinderMeasure: The measure.
    """
    if isinstance(spec, UniformSpec):
        return UniformMeasure()
    if isinstance(spec, BernoulliSpec):
        return BernoulliMeasure(spec.theta)
    if isinstance(spec, MarkovSpec):
        return MarkovMeasure(spec.initial, spec.transitions)
    if isinstance(spec, PointMassSpec):
        return PointMassMeasure(PeriodicSequence(spec.head, spec.repeat))
    if isinstance(spec, IntervalSpec):
        return IntervalUniformMeasure(spec.lower, spec.upper)
    if isinstance(spec, TableSpec):
        return TableMeasure(spec.masses)
    if isinstance(spec, MixtureSpec):
        return MixtureMeasure(spec.weights, [build_measure(c) for c in spec.components])
    raise SchemaError(f"Unknown model spec {type(spec).__name__}")


def build_joint(spec: JointSpec) -> JointMeasure:
    """Instantiate the joint a spec describes."""
    if isinstance(spec, ProductJointSpec):
        return product_joint(build_measure(spec.x), build_measure(spec.y))
    if isinstance(spec, BetaBernoulliJointSpec):
        return beta_bernoulli_joint()
    if isinstance(spec, CounterexampleSpec):
        return counterexample_joint(spec)
    raise SchemaError(f"Unknown joint spec {type(spec).__name__}")


def load_measure(source: str) -> CylinderMeasure:
    return build_measure(parse_model_spec(load_document(source)))


def load_joint(source: str) -> JointMeasure:
    return build_joint(parse_joint_spec(load_document(source)))


def load_any(source: str) -> Union[CylinderMeasure, JointMeasure]:
    """A measure or a joint, told apart by the document's type tag."""
    document = load_document(source)
    if is_joint_document(document):
        return build_joint(parse_joint_spec(document))
    return build_measure(parse_model_spec(document))


def load_test(source: str) -> FiniteTest:
    return FiniteTest.from_spec(FiniteTestSpec.model_validate(load_document(source)))


def load_pool(source: str) -> Tuple[List[CylinderMeasure], List[Fraction]]:
    """
    Read a deficiency pool.

    Returns:
        Tuple[List[CylinderMeasure], List[Fraction]]: Measures and their weights.
    """
    spec = PoolSpec.model_validate(load_document(source))
    return [build_measure(e.model) for e in spec.entries], [e.weight for e in spec.entries]
