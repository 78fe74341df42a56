"""Endpoint handlers wiring the HTTP surface to the core library."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from fastapi import APIRouter, HTTPException
from pydantic import BaseModel

from .. import __version__, circle, criterion, hankel, kernels, predict, processes, trees
from . import schemas as sc

router = APIRouter()


def _provenance(request: BaseModel) -> sc.Provenance:
    return sc.Provenance(
        tool={"name": "bssp", "version": __version__},
        request=request.model_dump(),
    )


def _psd_model(result: kernels.PsdResult) -> sc.PsdModel:
    return sc.PsdModel(**dataclasses.asdict(result))


# -- tree ---------------------------------------------------------------------


@router.post("/tree/relation", response_model=sc.RelationResponse)
def tree_relation(req: sc.RelationRequest) -> sc.RelationResponse:
    rel = trees.relation(trees.vertex_from_digits(req.a), trees.vertex_from_digits(req.b))
    return sc.RelationResponse(
        comparable=rel.comparable,
        distance=rel.distance,
        ancestor=list(rel.ancestor.word) if rel.ancestor is not None else None,
        provenance=_provenance(req),
    )


@router.post("/tree/truncate", response_model=sc.TruncateResponse)
def tree_truncate(req: sc.TruncateRequest) -> sc.TruncateResponse:
    trunc = trees.truncate(req.q, req.depth)
    return sc.TruncateResponse(size=trunc.size, labels=list(trunc.labels()), provenance=_provenance(req))


@router.post("/tree/delta", response_model=sc.DeltaResponse)
def tree_delta(req: sc.DeltaRequest) -> sc.DeltaResponse:
    tree = trees.parse_tree(req.tree.to_spec())
    values = [trees.delta_n(tree, n) for n in range(1, req.n_max + 1)]
    return sc.DeltaResponse(values=values, provenance=_provenance(req))


# -- circle ---------------------------------------------------------------------


@router.post("/szego", response_model=sc.SzegoResponse)
def szego(req: sc.SzegoRequest) -> sc.SzegoResponse:
    mu = req.measure.to_measure()
    res = circle.szego_mean(mu.density, grid=req.grid)
    return sc.SzegoResponse(
        value=res.value,
        method=res.method,
        flagged=res.flagged,
        floored_fraction=res.floored_fraction,
        mass=mu.total_mass(),
        provenance=_provenance(req),
    )


# -- kernel ---------------------------------------------------------------------


@router.post("/kernel/build", response_model=sc.KernelBuildResponse)
def kernel_build(req: sc.KernelBuildRequest) -> sc.KernelBuildResponse:
    alpha = req.alpha.to_sequence(default_n_max=max(req.depth, 1))
    matrix = kernels.branching_toeplitz(alpha, trees.truncate(alpha.q, req.depth))
    psd = kernels.psd_check(matrix) if req.check_psd else None
    return sc.KernelBuildResponse(
        matrix=sc.MatrixModel.from_matrix(matrix),
        psd=_psd_model(psd) if psd else None,
        passed=psd.psd if psd else True,
        provenance=_provenance(req),
    )


@router.post("/kernel/psd", response_model=sc.PsdResponse)
def kernel_psd(req: sc.PsdRequest) -> sc.PsdResponse:
    res = kernels.psd_check(req.matrix.to_matrix(), req.tol_rel)
    return sc.PsdResponse(
        psd=res.psd,
        min_eigenvalue=res.min_eigenvalue,
        tolerance=res.tolerance,
        passed=res.psd,
        provenance=_provenance(req),
    )


@router.post("/kernel/cantor", response_model=sc.CantorResponse)
def kernel_cantor(req: sc.CantorRequest) -> sc.CantorResponse:
    cg = kernels.cantor_gram(req.q, req.depth)
    reference = kernels.branching_toeplitz(
        kernels.HpdSequence.geometric(req.q, max(req.depth, 1)),
        trees.truncate(req.q, req.depth),
    )
    deviation = float(np.max(np.abs(cg.gram.data - reference.data)))
    psd = kernels.psd_check(cg.gram)
    return sc.CantorResponse(
        gram=sc.MatrixModel.from_matrix(cg.gram),
        kernel_deviation=deviation,
        psd=_psd_model(psd),
        passed=bool(psd.psd and deviation < 1e-12),
        provenance=_provenance(req),
    )


@router.post("/kernel/markov", response_model=sc.MarkovResponse)
def kernel_markov(req: sc.MarkovRequest) -> sc.MarkovResponse:
    out = kernels.markov_product(req.k1.to_matrix(), req.k2.to_matrix(), req.shared)
    psd = kernels.psd_check(out)
    return sc.MarkovResponse(
        matrix=sc.MatrixModel.from_matrix(out),
        psd=_psd_model(psd),
        passed=psd.psd,
        provenance=_provenance(req),
    )


# -- hyper-positivity --------------------------------------------------------------


@router.post("/hpd/check", response_model=sc.HpdCheckResponse)
def hpd_check_route(req: sc.HpdCheckRequest) -> sc.HpdCheckResponse:
    alpha = req.alpha.to_sequence(default_n_max=max(req.order, req.depth_oracle or 0))
    rep = kernels.hpd_check(alpha, req.order, depth_oracle=req.depth_oracle)
    return sc.HpdCheckResponse(
        consistent=rep.consistent,
        order=rep.order,
        method=rep.method,
        witness=rep.witness,
        message=rep.message,
        tree_oracle=_psd_model(rep.tree_oracle) if rep.tree_oracle else None,
        passed=rep.consistent,
        provenance=_provenance(req),
    )


@router.post("/hpd/from-measure", response_model=sc.AlphaResponse)
def hpd_from_measure(req: sc.AlphaFromMeasureRequest) -> sc.AlphaResponse:
    alpha = kernels.alpha_from_measure(req.measure.to_measure(), req.q, req.n_max)
    return sc.AlphaResponse(alpha=sc.AlphaModel.from_sequence(alpha), provenance=_provenance(req))


@router.post("/hpd/modulate", response_model=sc.AlphaResponse)
def hpd_modulate(req: sc.ModulateRequest) -> sc.AlphaResponse:
    alpha = kernels.modulate(req.alpha.to_sequence(), req.measure.to_measure())
    return sc.AlphaResponse(alpha=sc.AlphaModel.from_sequence(alpha), provenance=_provenance(req))


# -- simulation ----------------------------------------------------------------------


CLT_MIN_SAMPLES = 100  # below this the normal-approximation interval is not asserted


def _pair_stats(
    batch: processes.SampleBatch,
    pairs: list[tuple[int, int]],
    theory_fn,
) -> list[sc.PairStatModel]:
    stats = processes.empirical_cov(batch.samples, pairs)
    small = batch.n_samples < CLT_MIN_SAMPLES
    out = []
    for est in stats:
        theory = theory_fn(est.i, est.j)
        passed = None if (theory is None or small) else bool(abs(est.covariance - theory) <= est.ci99)
        out.append(
            sc.PairStatModel(
                pair=(batch.labels[est.i], batch.labels[est.j]),
                estimate=est.covariance,
                ci99=est.ci99,
                theory=theory,
                passed=passed,
            )
        )
    return out


def _theta_stats(theta: np.ndarray, depth: int, theory_fn) -> list[sc.PairStatModel]:
    pairs = [(n, n + k) for n in range(depth + 1) for k in range(depth + 1 - n)]
    stats = processes.empirical_cov(theta, pairs)
    small = theta.shape[0] < CLT_MIN_SAMPLES
    out = []
    for est in stats:
        theory = theory_fn(est.i, est.j)
        passed = None if (theory is None or small) else bool(abs(est.covariance - theory) <= est.ci99)
        out.append(
            sc.PairStatModel(
                pair=(f"theta{est.i}", f"theta{est.j}"),
                estimate=est.covariance,
                ci99=est.ci99,
                theory=theory,
                passed=passed,
            )
        )
    return out


@router.post("/simulate/xr", response_model=sc.SimulateResponse)
def simulate_xr_route(req: sc.SimulateXrRequest) -> sc.SimulateResponse:
    tail = req.tail if req.tail is not None else processes.SimulationConfig.choose_tail(req.r)
    cfg = processes.SimulationConfig(req.q, req.r, req.depth, tail, req.n_samples, req.seed)
    batch = processes.simulate_xr(cfg)
    trunc = trees.truncate(req.q, req.depth)
    scale = 1.0 / (1.0 - req.r**2)

    def pair_theory(i: int, j: int) -> float:
        rel = trees.relation(trunc.vertices[i], trunc.vertices[j])
        if not rel.comparable:
            return 0.0
        return req.r**rel.distance * req.q ** (-rel.distance / 2.0) * scale

    pairs = req.pairs if req.pairs is not None else _default_pairs(trunc)
    pair_stats = _pair_stats(batch, pairs, pair_theory)
    theta_stats: list[sc.PairStatModel] = []
    if req.theta_depth is not None:
        depth = min(req.theta_depth, req.depth)
        theta = processes.theta_average(batch, trees.truncate(req.q, req.depth))
        theta_stats = _theta_stats(theta, depth, lambda n, m: req.r ** (m - n) * scale)
    passed = all(s.passed for s in pair_stats + theta_stats if s.passed is not None)
    return sc.SimulateResponse(
        labels=list(batch.labels),
        pair_stats=pair_stats,
        theta_stats=theta_stats,
        batch_provenance=batch.provenance,
        samples=_sample_rows(batch) if req.return_samples else None,
        passed=passed,
        provenance=_provenance(req),
    )


SAMPLE_EXPORT_CAP = 2_000_000


def _sample_rows(batch: processes.SampleBatch) -> list[list[float]]:
    if batch.samples.size > SAMPLE_EXPORT_CAP:
        raise HTTPException(
            status_code=422,
            detail=f"sample export capped at {SAMPLE_EXPORT_CAP} values; reduce n_samples or depth",
        )
    return [[float(v) for v in row] for row in batch.samples]


def _default_pairs(trunc: trees.TreeTruncation) -> list[tuple[int, int]]:
    pairs = [(0, 0)]
    if trunc.size > 1:
        pairs.append((0, 1))
    if trunc.size > 2:
        pairs.append((1, 2))
    return pairs


@router.post("/simulate/kernel", response_model=sc.SimulateResponse)
def simulate_kernel_route(req: sc.SimulateKernelRequest) -> sc.SimulateResponse:
    alpha = None
    if req.matrix is not None:
        matrix = req.matrix.to_matrix()
        trunc = None
    else:
        if req.depth is None:
            raise HTTPException(status_code=422, detail="alpha simulation needs a depth")
        alpha = req.alpha.to_sequence(default_n_max=max(req.depth, 1))
        trunc = trees.truncate(alpha.q, req.depth)
        matrix = kernels.branching_toeplitz(alpha, trunc)
    batch = processes.sample_from_kernel(matrix, req.n_samples, req.seed)

    def pair_theory(i: int, j: int) -> float:
        return float(matrix.data[i, j].real)

    pairs = req.pairs if req.pairs is not None else [(0, min(1, matrix.size - 1))]
    pair_stats = _pair_stats(batch, pairs, pair_theory)
    theta_stats: list[sc.PairStatModel] = []
    if req.theta_depth is not None and trunc is not None and alpha is not None:
        depth = min(req.theta_depth, trunc.depth)
        theta = processes.theta_average(batch, trunc)

        def theta_theory(n: int, m: int) -> float:
            return float(np.real(alpha.spectral_coefficient(m - n)))

        theta_stats = _theta_stats(theta, depth, theta_theory)
    passed = all(s.passed for s in pair_stats + theta_stats if s.passed is not None)
    return sc.SimulateResponse(
        labels=list(batch.labels),
        pair_stats=pair_stats,
        theta_stats=theta_stats,
        batch_provenance=batch.provenance,
        samples=_sample_rows(batch) if req.return_samples else None,
        passed=passed,
        provenance=_provenance(req),
    )


# -- prediction -------------------------------------------------------------------


@router.post("/predict/tq", response_model=sc.PredictTqResponse)
def predict_tq_route(req: sc.PredictTqRequest) -> sc.PredictTqResponse:
    mu = req.measure.to_measure()
    n_max = max(max(req.depths), 8)
    alpha = kernels.alpha_from_measure(mu, req.q, n_max)
    rep = predict.predict_tq(
        alpha, mu, depths=tuple(req.depths), grid=req.grid, method=req.method
    )
    return sc.PredictTqResponse(
        szego_value=rep.szego_value,
        depths=list(rep.depths),
        oracle_values=list(rep.oracle_values),
        converged=rep.converged,
        decreasing=rep.decreasing,
        gap=rep.gap,
        method=rep.method,
        provenance=_provenance(req),
    )


@router.post("/predict/tq1", response_model=sc.PredictStarResponse)
def predict_tq1_route(req: sc.PredictStarRequest) -> sc.PredictStarResponse:
    rep = predict.predict_tq1(req.measure.to_measure(), req.q, grid=req.grid)
    body = sc.CriterionResponseBody(**dataclasses.asdict(rep.criterion))
    return sc.PredictStarResponse(
        value=rep.value,
        valid=rep.valid,
        clipped=rep.clipped,
        criterion=body,
        passed=rep.valid,
        provenance=_provenance(req),
    )


# -- criterion -----------------------------------------------------------------------


@router.post("/criterion/tq1", response_model=sc.CriterionResponse)
def criterion_tq1_route(req: sc.CriterionRequest) -> sc.CriterionResponse:
    mu = req.measure.to_measure()
    rep = criterion.tq1_criterion(mu, req.q, grid=req.grid, tol=req.tol)
    oracle = None
    if req.oracle_n_max:
        o = criterion.cn_oracle(mu, req.q, req.oracle_n_max)
        oracle = sc.CnOracleModel(
            all_psd=o.all_psd,
            first_failure=o.first_failure,
            min_eigenvalues=list(o.min_eigenvalues),
        )
    return sc.CriterionResponse(
        q=rep.q,
        lhs=rep.lhs,
        rhs=rep.rhs,
        holds=rep.holds,
        margin=rep.margin,
        mass=rep.mass,
        szego_flagged=rep.szego_flagged,
        oracle=oracle,
        passed=rep.holds,
        provenance=_provenance(req),
    )


@router.post("/criterion/two-level", response_model=sc.TwoLevelResponse)
def criterion_two_level(req: sc.TwoLevelRequest) -> sc.TwoLevelResponse:
    bounds = criterion.two_level_bounds(req.q)
    report = None
    if req.a is not None and req.b is not None:
        report = dataclasses.asdict(criterion.two_level_report(req.a, req.b, req.q))
    return sc.TwoLevelResponse(
        lower=bounds.lower, upper=bounds.upper, report=report, provenance=_provenance(req)
    )


@router.post("/criterion/poisson-log", response_model=sc.PoissonLogResponse)
def criterion_poisson_log(req: sc.PoissonLogRequest) -> sc.PoissonLogResponse:
    rep = circle.poisson_log_bound(req.measure.to_measure(), req.r, grid=req.grid)
    return sc.PoissonLogResponse(
        lhs=rep.lhs,
        rhs=rep.rhs,
        holds=rep.holds,
        margin=rep.margin,
        passed=rep.holds,
        provenance=_provenance(req),
    )


@router.post("/criterion/sup-norm", response_model=sc.SupNormResponse)
def criterion_sup_norm(req: sc.SupNormRequest) -> sc.SupNormResponse:
    rep = criterion.sup_norm_sufficient(req.g.to_poly(), req.q, grid=req.grid)
    return sc.SupNormResponse(
        threshold=rep.threshold, sup=rep.sup, sufficient=rep.sufficient, provenance=_provenance(req)
    )


@router.post("/criterion/fourier-bound", response_model=sc.FourierBoundResponse)
def criterion_fourier_bound(req: sc.FourierBoundRequest) -> sc.FourierBoundResponse:
    tree = trees.parse_tree(req.tree.to_spec())
    rep = criterion.fourier_bound_check(req.measure.to_measure(), tree, req.n_max)
    return sc.FourierBoundResponse(
        violations=list(rep.violations),
        ratios=list(rep.ratios),
        passed=not rep.violations,
        provenance=_provenance(req),
    )


# -- hankel -------------------------------------------------------------------------


@router.post("/hankel/verify", response_model=sc.InequalityResponse)
def hankel_verify(req: sc.HankelVerifyRequest) -> sc.InequalityResponse:
    mu = req.measure.to_measure()
    f = req.f.to_poly()
    if req.which == "two-weight":
        r = req.r if req.r is not None else 1.0 / math.sqrt(2.0)
        rep = hankel.two_weight_check(mu, r, f, grid=req.grid, n_sym=req.n_sym, tol=req.tol)
    elif req.which == "en":
        if req.n_dilation is None or req.b0 is None:
            raise HTTPException(status_code=422, detail="en inequality needs n_dilation and b0")
        rep = hankel.en_inequality_check(
            mu, req.b0.to_poly(), f, req.n_dilation, grid=req.grid, n_sym=req.n_sym, tol=req.tol
        )
    else:
        rep = hankel.smoothed_inequality_check(mu, f, grid=req.grid, n_sym=req.n_sym, tol=req.tol)
    return sc.InequalityResponse(
        kind=rep.kind,
        sup_ratio=rep.sup_ratio,
        bound=rep.bound,
        slack=rep.slack,
        holds=rep.holds,
        argmax_theta=rep.argmax_theta,
        truncation_allowance=rep.truncation_allowance,
        n_sym=rep.n_sym,
        grid=rep.grid,
        passed=rep.holds,
        provenance=_provenance(req),
    )


@router.post("/hankel/bounded", response_model=sc.BoundedResponse)
def hankel_bounded(req: sc.BoundedRequest) -> sc.BoundedResponse:
    rep = hankel.boundedness_conditions(req.symbol.to_poly())
    return sc.BoundedResponse(**dataclasses.asdict(rep), provenance=_provenance(req))


@router.post("/hankel/norm", response_model=sc.HankelNormResponse)
def hankel_norm(req: sc.HankelNormRequest) -> sc.HankelNormResponse:
    value = hankel.h2_linf_norm(req.symbol.to_poly(), n_trunc=req.n_trunc, grid=req.grid)
    return sc.HankelNormResponse(value=value, provenance=_provenance(req))


@router.post("/hankel/hlp", response_model=sc.HlpResponse)
def hankel_hlp(req: sc.HlpRequest) -> sc.HlpResponse:
    rep = hankel.hlp_pairing(req.a, req.b)
    return sc.HlpResponse(
        pairing=rep.pairing,
        bound=rep.bound,
        passed=rep.pairing <= rep.bound,
        provenance=_provenance(req),
    )


@router.get("/health", response_model=sc.HealthResponse)
def health() -> sc.HealthResponse:
    return sc.HealthResponse(name="bssp", version=__version__)
