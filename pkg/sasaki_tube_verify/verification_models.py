from typing import Any, Literal

from agent_utilities.core.config import setting
from agent_utilities.core.exceptions import ParameterError
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
)

from sasaki_tube_verify.exceptions import UnknownSuite

SUITES: tuple[str, ...] = (
    "sasaki",
    "h-cases",
    "deformation",
    "kaehler-tube",
    "hyper",
    "classify",
    "all",
)


class VerificationModel(BaseModel):
    """Base for engine configuration and report models.

    Unknown keyword arguments raise ParameterError naming the bad argument
    and the valid ones.
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    def __init__(self, **data: Any) -> None:
        try:
            super().__init__(**data)
        except ValidationError as exc:
            unknown = sorted(
                {
                    str(err["loc"][0])
                    for err in exc.errors()
                    if err["type"] == "extra_forbidden" and err["loc"]
                }
            )
            if not unknown:
                raise
            valid = sorted(self.__class__.model_fields)
            raise ParameterError(
                f"Unknown argument(s) {unknown} for {self.__class__.__name__}. "
                f"Valid arguments: {valid}"
            ) from exc


def _default_seed() -> int:
    return int(setting("SASAKI_TUBE_SEED", 0) or 0)


class SuiteConfig(VerificationModel):
    """
    Configuration of one verification run.

    Attributes:
    - manifold (str): Catalog name or path to a manifest file.
    - suite (str): One of ``SUITES``.
    - tol (float): Tolerance for h-tensor and classification checks.
    - samples (int): Sample count per randomized check.
    - seed (int): Seed that fully determines all sampling.
    """

    manifold: str
    suite: str = "all"
    tol: float = Field(default=1e-6, gt=0)
    geodesic_tol: float = Field(default=1e-5, gt=0)
    parallel_tol: float = Field(default=1e-5, gt=0)
    flat_tol: float = Field(default=1e-6, gt=0)
    continuity_tol: float = Field(default=1e-8, gt=0)
    samples: int = Field(default=20, ge=1)
    seed: int = Field(default_factory=_default_seed)
    epsilon: float | None = Field(default=None, gt=0)
    out: str | None = None
    format: Literal["json", "csv"] = "json"

    def __init__(self, **data: Any) -> None:
        try:
            super().__init__(**data)
        except ValidationError as exc:
            if any(err["loc"] and err["loc"][0] == "suite" for err in exc.errors()):
                raise UnknownSuite(
                    f"Unknown suite {data.get('suite')!r}. Valid suites: {list(SUITES)}"
                ) from exc
            raise

    @field_validator("suite")
    @classmethod
    def validate_suite(cls, v):
        if v not in SUITES:
            raise ValueError(f"suite must be one of {SUITES}")
        return v

    @field_validator("manifold")
    @classmethod
    def validate_manifold(cls, v):
        if not v or not v.strip():
            raise ValueError("manifold must be a catalog name or a manifest path")
        return v.strip()


class CheckRecord(VerificationModel):
    """One measured check. Records with ``binding=False`` are observations."""

    name: str
    anchor: str = ""
    residual: float | None = None
    tolerance: float | None = None
    passed: bool
    binding: bool = True
    region: str | None = None
    t: float | None = None
    value: float | None = None
    expected: float | None = None
    detail: str | None = None


class RunReport(VerificationModel):
    suite: str
    manifold: str
    records: list[CheckRecord] = Field(default_factory=list)
    wall_time: float = 0.0
    engine_version: str
    config: SuiteConfig
    passed: bool = True

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if r.binding and not r.passed]


class ManifoldCatalogEntry(VerificationModel):
    name: str
    dimension: int
    has_acs: bool
    path: str
    description: str = ""


class FermiChartReport(VerificationModel):
    manifold: str
    tangential: int
    samples: int
    t_max: float
    max_deviation: float
    tolerance: float
    truncated: int = 0
    passed: bool
    failures: list[str] = Field(default_factory=list)


class BracketReport(VerificationModel):
    """Residuals of the four lift bracket identities at one bundle point."""

    point: list[float]
    vertical_vertical: float
    horizontal_vertical: float
    horizontal_projection: float
    horizontal_curvature: float
    tolerance: float = 1e-6

    @property
    def max_residual(self) -> float:
        return max(
            self.vertical_vertical,
            self.horizontal_vertical,
            self.horizontal_projection,
            self.horizontal_curvature,
        )

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


class ContinuityReport(VerificationModel):
    samples: int
    inner_interface: float
    outer_interface: float
    tolerance: float
    passed: bool


class TotallyGeodesicReport(VerificationModel):
    algebraic_samples: int
    algebraic_residual: float
    algebraic_tolerance: float
    launches: int
    drift: float
    drift_tolerance: float
    truncated: int = 0
    passed: bool


class FlatInnerReport(VerificationModel):
    """Curvature of a deformed metric on inner-disk samples, split by index block.

    Block labels spell the index types of ``R^l_kij`` in storage order, with
    ``T`` for tangential and ``N`` for transverse indices.
    """

    samples: int
    max_residual: float
    transverse_residual: float
    blocks: dict[str, float]
    tolerance: float
    passed: bool
    transverse_passed: bool


class ParallelReport(VerificationModel):
    structure: str
    region: str
    samples: int
    max_residual: float
    tolerance: float
    passed: bool
    points: list[list[float]] = Field(default_factory=list)


class HyperStageReport(VerificationModel):
    base: str
    stage1_dimension: int
    stage2_dimension: int
    samples: int
    quaternion_residual: float
    stage1_parallel_residual: float
    parallel_residuals: dict[str, float]
    tolerance: float
    quaternion_tolerance: float = 1e-8
    passed: bool


class GHClassEntry(VerificationModel):
    member: bool
    residual: float
    samples: int


class GHClassReport(VerificationModel):
    manifold: str
    dimension: int
    table_n: float
    valid_dimension: bool
    tolerance: float
    seed: int
    points: int
    vectors: int
    classes: dict[str, GHClassEntry]
    lattice_consistent: bool = True

    def members(self) -> list[str]:
        return [label for label, entry in self.classes.items() if entry.member]

    def is_member(self, label: str) -> bool:
        return self.classes[label].member

    def to_json_document(self) -> dict[str, Any]:
        return {
            "manifold": self.manifold,
            "classes": {
                label: entry.model_dump() for label, entry in self.classes.items()
            },
            "tolerance": self.tolerance,
            "seed": self.seed,
            "points": self.points,
            "vectors": self.vectors,
            "valid_dimension": self.valid_dimension,
            "lattice_consistent": self.lattice_consistent,
        }
