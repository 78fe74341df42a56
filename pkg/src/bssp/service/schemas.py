"""Pydantic request/response models for the HTTP service.

Wire formats follow the package's JSON conventions: measures are
{"atoms": [{"theta", "mass"}], "density": {"kind": "trig"|"grid", ...}},
trig polynomials are coefficient triples [n, re, im], matrices carry
[re, im] entry pairs with optional vertex labels.  Angles are radians.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from ..circle import SpectralMeasure, TrigPoly, measure_from_dict, trig_poly_from_coeff_list
from ..kernels import HermitianMatrix, HpdSequence

CoeffTriple = tuple[int, float, float]
ComplexPair = tuple[float, float]


# -- shared value models -----------------------------------------------------


class AtomModel(BaseModel):
    theta: float
    mass: float = Field(ge=0)


class TrigDensityModel(BaseModel):
    kind: Literal["trig"]
    coeffs: list[CoeffTriple]


class GridDensityModel(BaseModel):
    kind: Literal["grid"]
    values: list[float]


DensityModel = Union[TrigDensityModel, GridDensityModel]


class MeasureModel(BaseModel):
    atoms: list[AtomModel] = Field(default_factory=list)
    density: Optional[DensityModel] = Field(default=None, discriminator="kind")

    def to_measure(self) -> SpectralMeasure:
        return measure_from_dict(self.model_dump())


class TrigPolyModel(BaseModel):
    coeffs: list[CoeffTriple]

    def to_poly(self) -> TrigPoly:
        return trig_poly_from_coeff_list(self.coeffs)

    @staticmethod
    def from_poly(poly: TrigPoly) -> "TrigPolyModel":
        return TrigPolyModel(coeffs=poly.to_coeff_list())


class AlphaModel(BaseModel):
    """Sequence spec: the named families or explicit values alpha(0..n_max)."""

    kind: Literal["beta", "white", "explicit"] = "explicit"
    q: int = Field(ge=2)
    n_max: Optional[int] = None
    values: Optional[list[ComplexPair]] = None

    def to_sequence(self, default_n_max: int = 32) -> HpdSequence:
        if self.kind == "beta":
            return HpdSequence.geometric(self.q, self.n_max or default_n_max)
        if self.kind == "white":
            return HpdSequence.white_noise(self.q, self.n_max or default_n_max)
        if not self.values:
            raise ValueError("explicit alpha spec needs values")
        vals = np.array([complex(re, im) for re, im in self.values])
        return HpdSequence(self.q, vals)

    @staticmethod
    def from_sequence(alpha: HpdSequence) -> "AlphaModel":
        values = [(float(v.real), float(v.imag)) for v in alpha.values]
        return AlphaModel(kind="explicit", q=alpha.q, n_max=alpha.n_max, values=values)


class MatrixModel(BaseModel):
    labels: Optional[list[str]] = None
    rows: list[list[ComplexPair]]

    def to_matrix(self) -> HermitianMatrix:
        data = np.array([[complex(re, im) for re, im in row] for row in self.rows])
        return HermitianMatrix(data, tuple(self.labels) if self.labels else None)

    @staticmethod
    def from_matrix(matrix: HermitianMatrix) -> "MatrixModel":
        rows = [
            [(float(z.real), float(z.imag)) for z in row] for row in matrix.data
        ]
        return MatrixModel(labels=list(matrix.labels) if matrix.labels else None, rows=rows)


class TreeModel(BaseModel):
    kind: Literal["homogeneous", "parent_array", "tq1"]
    q: Optional[int] = None
    depth: Optional[int] = None
    parents: Optional[list[int]] = None
    n: Optional[int] = None

    def to_spec(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class Provenance(BaseModel):
    tool: dict
    request: dict


# -- tree endpoints -----------------------------------------------------------


class RelationRequest(BaseModel):
    a: list[int]
    b: list[int]


class RelationResponse(BaseModel):
    comparable: bool
    distance: Optional[int]
    ancestor: Optional[list[int]]
    provenance: Provenance


class TruncateRequest(BaseModel):
    q: int = Field(ge=2)
    depth: int = Field(ge=0)


class TruncateResponse(BaseModel):
    size: int
    labels: list[str]
    provenance: Provenance


class DeltaRequest(BaseModel):
    tree: TreeModel
    n_max: int = Field(ge=1, le=64)


class DeltaResponse(BaseModel):
    values: list[int]
    provenance: Provenance


# -- circle endpoints ---------------------------------------------------------


class SzegoRequest(BaseModel):
    measure: MeasureModel
    grid: int = Field(default=4096, ge=16, le=1 << 20)


class SzegoResponse(BaseModel):
    value: float
    method: str
    flagged: bool
    floored_fraction: float
    mass: float
    provenance: Provenance


# -- kernel endpoints ---------------------------------------------------------


class KernelBuildRequest(BaseModel):
    alpha: AlphaModel
    depth: int = Field(ge=0)
    check_psd: bool = True


class PsdModel(BaseModel):
    psd: bool
    min_eigenvalue: float
    tolerance: float


class KernelBuildResponse(BaseModel):
    matrix: MatrixModel
    psd: Optional[PsdModel]
    passed: bool
    provenance: Provenance


class PsdRequest(BaseModel):
    matrix: MatrixModel
    tol_rel: float = 1e-9


class PsdResponse(BaseModel):
    psd: bool
    min_eigenvalue: float
    tolerance: float
    passed: bool
    provenance: Provenance


class CantorRequest(BaseModel):
    q: int = Field(ge=2)
    depth: int = Field(ge=0)


class CantorResponse(BaseModel):
    gram: MatrixModel
    kernel_deviation: float
    psd: PsdModel
    passed: bool
    provenance: Provenance


class MarkovRequest(BaseModel):
    k1: MatrixModel
    k2: MatrixModel
    shared: str


class MarkovResponse(BaseModel):
    matrix: MatrixModel
    psd: PsdModel
    passed: bool
    provenance: Provenance


# -- hyper-positivity endpoints ----------------------------------------------


class HpdCheckRequest(BaseModel):
    alpha: AlphaModel
    order: int = Field(ge=1, le=64)
    depth_oracle: Optional[int] = Field(default=None, ge=0, le=12)


class HpdCheckResponse(BaseModel):
    consistent: bool
    order: int
    method: str
    witness: dict
    message: str
    tree_oracle: Optional[PsdModel]
    passed: bool
    provenance: Provenance


class AlphaFromMeasureRequest(BaseModel):
    measure: MeasureModel
    q: int = Field(ge=2)
    n_max: int = Field(default=32, ge=0, le=256)


class AlphaResponse(BaseModel):
    alpha: AlphaModel
    provenance: Provenance


class ModulateRequest(BaseModel):
    alpha: AlphaModel
    measure: MeasureModel


# -- simulation endpoints ------------------------------------------------------


class PairStatModel(BaseModel):
    pair: tuple[str, str]
    estimate: float
    ci99: float
    theory: Optional[float]
    passed: Optional[bool]


class SimulateXrRequest(BaseModel):
    q: int = Field(ge=2)
    r: float = Field(gt=0, lt=1)
    depth: int = Field(ge=0)
    tail: Optional[int] = Field(default=None, ge=0)
    n_samples: int = Field(ge=2, le=2_000_000)
    seed: int = Field(ge=0)
    pairs: Optional[list[tuple[int, int]]] = None
    theta_depth: Optional[int] = Field(default=None, ge=0)
    return_samples: bool = False


class SimulateResponse(BaseModel):
    labels: list[str]
    pair_stats: list[PairStatModel]
    theta_stats: list[PairStatModel]
    batch_provenance: dict
    samples: Optional[list[list[float]]] = None
    passed: bool
    provenance: Provenance


class SimulateKernelRequest(BaseModel):
    alpha: Optional[AlphaModel] = None
    depth: Optional[int] = Field(default=None, ge=0)
    matrix: Optional[MatrixModel] = None
    n_samples: int = Field(ge=2, le=2_000_000)
    seed: int = Field(ge=0)
    pairs: Optional[list[tuple[int, int]]] = None
    theta_depth: Optional[int] = Field(default=None, ge=0)
    return_samples: bool = False

    @field_validator("matrix")
    @classmethod
    def _one_source(cls, v, info):
        if v is None and info.data.get("alpha") is None:
            raise ValueError("provide either alpha+depth or an explicit matrix")
        return v


# -- prediction endpoints -------------------------------------------------------


class PredictTqRequest(BaseModel):
    measure: MeasureModel
    q: int = Field(ge=2)
    depths: list[int] = Field(default=[1, 2, 3, 4, 6, 8])
    grid: int = Field(default=4096, ge=16, le=1 << 20)
    method: Literal["symmetric", "tree"] = "symmetric"


class PredictTqResponse(BaseModel):
    szego_value: float
    depths: list[int]
    oracle_values: list[float]
    converged: bool
    decreasing: bool
    gap: float
    method: str
    provenance: Provenance


class PredictStarRequest(BaseModel):
    measure: MeasureModel
    q: int = Field(ge=2)
    grid: int = Field(default=4096, ge=16, le=1 << 20)


class PredictStarResponse(BaseModel):
    value: Optional[float]
    valid: bool
    clipped: bool
    criterion: "CriterionResponseBody"
    passed: bool
    provenance: Provenance


# -- criterion endpoints ---------------------------------------------------------


class CriterionResponseBody(BaseModel):
    q: int
    lhs: float
    rhs: float
    holds: bool
    margin: float
    mass: float
    szego_flagged: bool


class CriterionRequest(BaseModel):
    measure: MeasureModel
    q: int = Field(ge=2)
    grid: int = Field(default=4096, ge=16, le=1 << 20)
    oracle_n_max: Optional[int] = Field(default=None, ge=1, le=512)
    tol: float = Field(default=1e-9, gt=0)


class CnOracleModel(BaseModel):
    all_psd: bool
    first_failure: Optional[int]
    min_eigenvalues: list[float]


class CriterionResponse(BaseModel):
    q: int
    lhs: float
    rhs: float
    holds: bool
    margin: float
    mass: float
    szego_flagged: bool
    oracle: Optional[CnOracleModel]
    passed: bool
    provenance: Provenance


class TwoLevelRequest(BaseModel):
    q: int = Field(ge=2)
    a: Optional[float] = Field(default=None, gt=0)
    b: Optional[float] = Field(default=None, gt=0)


class TwoLevelResponse(BaseModel):
    lower: float
    upper: float
    report: Optional[dict]
    provenance: Provenance


class PoissonLogRequest(BaseModel):
    measure: MeasureModel
    r: float = Field(ge=0, lt=1)
    grid: int = Field(default=4096, ge=16, le=1 << 20)


class PoissonLogResponse(BaseModel):
    lhs: float
    rhs: float
    holds: bool
    margin: float
    passed: bool
    provenance: Provenance


class SupNormRequest(BaseModel):
    g: TrigPolyModel
    q: int = Field(ge=2)
    grid: int = Field(default=4096, ge=16, le=1 << 20)


class SupNormResponse(BaseModel):
    threshold: float
    sup: float
    sufficient: bool
    provenance: Provenance


class FourierBoundRequest(BaseModel):
    measure: MeasureModel
    tree: TreeModel
    n_max: int = Field(ge=1, le=64)


class FourierBoundResponse(BaseModel):
    violations: list[int]
    ratios: list[float]
    passed: bool
    provenance: Provenance


# -- hankel endpoints -------------------------------------------------------------


class HankelVerifyRequest(BaseModel):
    which: Literal["two-weight", "en", "smoothed"]
    measure: MeasureModel
    f: TrigPolyModel
    r: Optional[float] = Field(default=None, ge=0, lt=1)
    n_dilation: Optional[int] = Field(default=None, ge=1, le=64)
    b0: Optional[TrigPolyModel] = None
    grid: int = Field(default=8192, ge=64, le=1 << 20)
    n_sym: int = Field(default=128, ge=8, le=4096)
    tol: float = Field(default=1e-9, gt=0)


class InequalityResponse(BaseModel):
    kind: str
    sup_ratio: float
    bound: float
    slack: float
    holds: bool
    argmax_theta: float
    truncation_allowance: float
    n_sym: int
    grid: int
    passed: bool
    provenance: Provenance


class BoundedRequest(BaseModel):
    symbol: TrigPolyModel


class BoundedResponse(BaseModel):
    h_half_norm: float
    h_half_diverging: bool
    h_one_norm: float
    h_one_diverging: bool
    positive_coefficients: bool
    positive_test_sum: Optional[float]
    positive_test_diverging: Optional[bool]
    tri_state: str
    truncation: int
    provenance: Provenance


class HankelNormRequest(BaseModel):
    symbol: TrigPolyModel
    n_trunc: Optional[int] = Field(default=None, ge=0)
    grid: int = Field(default=4096, ge=64, le=1 << 20)


class HankelNormResponse(BaseModel):
    value: float
    provenance: Provenance


class HlpRequest(BaseModel):
    a: list[float]
    b: list[float]


class HlpResponse(BaseModel):
    pairing: float
    bound: float
    passed: bool
    provenance: Provenance


class HealthResponse(BaseModel):
    name: str
    version: str
