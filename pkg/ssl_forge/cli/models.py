"""
Experiment and suite configuration models for the command-line harness.
"""
import json
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ssl_forge.core.exceptions import ConfigError
from ssl_forge.core.pipeline import EstimatorSpec, StepSpec


class CsvSource(BaseModel):
    """A dataset read from a CSV file."""
    model_config = ConfigDict(extra="forbid")

    path: str = Field(..., description="Path of the CSV file")
    label_column: str = Field("label", description="Name of the label column")
    label_kind: Literal["class", "real"] = Field("class", description="Parse labels as classes or real targets")


class SyntheticSource(BaseModel):
    """A dataset produced by a generator."""
    model_config = ConfigDict(extra="forbid")

    kind: str = Field(..., description="Generator name: two_moons, blobs or linear")
    params: Dict[str, Any] = Field(default_factory=dict, description="Generator parameters")
    seed: int = Field(0, description="Generator seed")


class DatasetConfig(BaseModel):
    """Exactly one dataset source."""
    model_config = ConfigDict(extra="forbid")

    csv: Optional[CsvSource] = Field(None, description="CSV source")
    synthetic: Optional[SyntheticSource] = Field(None, description="Synthetic source")

    @model_validator(mode="after")
    def check_single_source(self) -> "DatasetConfig":
        if (self.csv is None) == (self.synthetic is None):
            raise ValueError("dataset needs exactly one of 'csv' or 'synthetic'")
        return self

    @property
    def label(self) -> str:
        return self.synthetic.kind if self.synthetic is not None else self.csv.path


class GenConfig(BaseModel):
    """Arguments of the `gen` subcommand when given as a config file."""
    model_config = ConfigDict(extra="forbid")

    kind: str = Field(..., description="Generator name")
    params: Dict[str, Any] = Field(default_factory=dict, description="Generator parameters")
    seed: int = Field(0, description="Generator seed")
    out: Optional[str] = Field(None, description="CSV destination")


class SplitConfig(BaseModel):
    """How labeled rows are chosen; the remainder becomes the unlabeled pool."""
    model_config = ConfigDict(extra="forbid")

    n_labeled: int = Field(..., ge=1, description="Rows that keep their labels")
    stratified: bool = Field(True, description="Stratify by class (ignored for regression)")
    seed: int = Field(0, description="Split seed")
    test_fraction: float = Field(0.0, ge=0.0, lt=1.0, description="Share of the remainder held out of fitting")


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: Optional[str] = Field(None, description="Result file; stdout when omitted")
    format: Literal["json", "csv", "table"] = Field("json", description="Result format")


class ExperimentConfig(BaseModel):
    """One dataset, split, optional pipeline, algorithm and metric list."""
    model_config = ConfigDict(extra="forbid")

    name: Optional[str] = Field(None, description="Experiment label used in bench rows")
    dataset: DatasetConfig = Field(..., description="Dataset source")
    split: SplitConfig = Field(..., description="Labeled / unlabeled split")
    pipeline: List[StepSpec] = Field(default_factory=list, description="Transform steps applied before the algorithm")
    algorithm: EstimatorSpec = Field(..., description="Algorithm name and parameters")
    metrics: List[str] = Field(default_factory=list, description="Metric names; task defaults when empty")
    seed: int = Field(0, description="Fit seed")
    output: OutputConfig = Field(default_factory=OutputConfig, description="Output destination")

    @property
    def label(self) -> str:
        return self.name or f"{self.algorithm.name}@{self.dataset.label}"


class SuiteConfig(BaseModel):
    """A list of experiments repeated over seeds."""
    model_config = ConfigDict(extra="forbid")

    experiments: List[ExperimentConfig] = Field(default_factory=list, description="Experiments in report order")
    seeds: List[int] = Field(default_factory=lambda: [0], description="Seeds applied to split and fit")
    output: OutputConfig = Field(default_factory=OutputConfig, description="Output destination")


def parse_config(model, data: Dict[str, Any], what: str):
    try:
        return model(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid {what} config: {e}") from e
    except TypeError as e:
        raise ConfigError(f"invalid {what} config: {e}") from e


def read_config(path: str, model, what: str = "experiment"):
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return parse_config(model, data, what)
