"""HTTP service around the library: build hash functions once, keep them
in an in-memory registry, and serve queries and benchmarks to any number
of clients. The CLI is a thin client of these endpoints.

All timing happens in-process on the server; HTTP latency never enters a
reported number. Corpora are identified by (n, seed) and regenerated
deterministically server-side instead of being shipped over the wire.
"""

from __future__ import annotations

import base64
import itertools
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import Response
from pydantic import BaseModel, Field

from . import __version__, analysis
from .assignment import AssignmentSpec, default_epsilon
from .bench import run_build, run_query_bench
from .builder import BuildConfig, InvalidConfig
from .keygen import gen_keys
from .mphf import DuplicateKeys, FormatError, Mphf


class BuildRequest(BaseModel):
    n: int = Field(..., ge=1, description="number of generated keys")
    seed: int = 0
    lambda_: float = Field(8.0, alias="lambda", gt=0)
    partition_size: float = Field(2500.0, ge=1)
    encoder: str = "ic-r"
    assignment: Literal["uniform", "skew", "beta-star", "beta-eps"] = "beta-eps"
    epsilon: Optional[float] = None
    tie_break: Literal["asc-expected", "desc-expected"] = "asc-expected"
    threads: int = Field(1, ge=1)

    model_config = {"populate_by_name": True}


class BuildResponse(BaseModel):
    mphf_id: str
    n: int
    bits_per_key: float
    construction_ns_per_key: float
    trials_per_key: float
    num_partitions: int
    bucket_count: int
    encoder: str
    assignment: str
    epsilon: float
    lambda_: float
    partition_size: float
    global_seed: int
    verified: bool


class MphfInfo(BaseModel):
    mphf_id: str
    n: int
    bits_per_key: float
    num_partitions: int
    bucket_count: int
    encoder: str
    assignment: str
    epsilon: float
    lambda_: float
    partition_size: float
    global_seed: int


class ImportRequest(BaseModel):
    data_base64: str


class QueryRequest(BaseModel):
    keys: list[str]


class QueryResponse(BaseModel):
    indices: list[int]


class QueryBenchRequest(BaseModel):
    mphf_id: str
    n: int = Field(..., ge=1)
    seed: int = 0


class QueryBenchResponse(BaseModel):
    n: int
    ns_per_query: float
    verified: bool


class AnalyzeRequest(BaseModel):
    n: int = Field(..., ge=1)
    seed: int = 0
    lambdas: list[float] = [8.0]
    assignments: list[Literal["uniform", "skew", "beta-eps", "beta-star"]] = [
        "uniform",
        "skew",
        "beta-eps",
    ]
    partition_size: float = Field(2500.0, ge=1)
    epsilon: Optional[float] = None
    threads: int = Field(1, ge=1)


class AnalyzeRow(BaseModel):
    assignment: str
    lambda_: float
    partition_size: float
    trials_per_key: float
    bits_per_key: float
    wall_seconds: float


class AnalyzeResponse(BaseModel):
    rows: list[AnalyzeRow]
    csv: str


def _assignment_spec(name: str, epsilon, lambda_, partition_size) -> AssignmentSpec:
    kind = name.replace("-", "_")
    if kind == "beta_eps":
        eps = default_epsilon(lambda_, partition_size) if epsilon is None else epsilon
        return AssignmentSpec("beta_eps", eps)
    return AssignmentSpec(kind)


def create_app() -> FastAPI:
    app = FastAPI(title="pilothash", version=__version__)
    registry: dict[str, Mphf] = {}
    ids = itertools.count(1)

    def get_mphf(mphf_id: str) -> Mphf:
        f = registry.get(mphf_id)
        if f is None:
            raise HTTPException(status_code=404, detail=f"no mphf {mphf_id!r}")
        return f

    def info(mphf_id: str, f: Mphf) -> MphfInfo:
        return MphfInfo(
            mphf_id=mphf_id,
            n=f.n,
            bits_per_key=f.bits_per_key(),
            num_partitions=f.layout.num_partitions,
            bucket_count=f.bcount,
            encoder=f.encoder_name,
            assignment=f.table.spec.kind,
            epsilon=f.table.spec.epsilon,
            lambda_=f.lambda_,
            partition_size=f.partition_size,
            global_seed=f.global_seed,
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__, "mphfs": len(registry)}

    @app.post("/build", response_model=BuildResponse)
    def build_endpoint(req: BuildRequest):
        try:
            spec = _assignment_spec(req.assignment, req.epsilon, req.lambda_, req.partition_size)
            config = BuildConfig(
                lambda_=req.lambda_,
                partition_size=req.partition_size,
                assignment=spec,
                global_seed=req.seed,
                encoder=req.encoder,
                tie_break=req.tie_break,
                threads=req.threads,
            )
        except (InvalidConfig, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        corpus = gen_keys(req.n, req.seed)
        try:
            f, report = run_build(corpus, config)
        except DuplicateKeys as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        mphf_id = f"mphf-{next(ids)}"
        registry[mphf_id] = f
        return BuildResponse(
            mphf_id=mphf_id,
            n=report.n,
            bits_per_key=report.bits_per_key,
            construction_ns_per_key=report.construction_ns_per_key,
            trials_per_key=report.trials_per_key,
            num_partitions=report.num_partitions,
            bucket_count=report.bucket_count,
            encoder=f.encoder_name,
            assignment=f.table.spec.kind,
            epsilon=f.table.spec.epsilon,
            lambda_=f.lambda_,
            partition_size=f.partition_size,
            global_seed=f.global_seed,
            verified=report.verified,
        )

    @app.get("/mphf/{mphf_id}", response_model=MphfInfo)
    def mphf_info(mphf_id: str):
        return info(mphf_id, get_mphf(mphf_id))

    @app.get("/mphf/{mphf_id}/bytes")
    def mphf_bytes(mphf_id: str):
        return Response(
            content=get_mphf(mphf_id).serialize(),
            media_type="application/octet-stream",
        )

    @app.delete("/mphf/{mphf_id}")
    def mphf_delete(mphf_id: str):
        get_mphf(mphf_id)
        del registry[mphf_id]
        return {"deleted": mphf_id}

    @app.post("/mphf/import", response_model=MphfInfo)
    def mphf_import(req: ImportRequest):
        try:
            f = Mphf.deserialize(base64.b64decode(req.data_base64))
        except FormatError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        mphf_id = f"mphf-{next(ids)}"
        registry[mphf_id] = f
        return info(mphf_id, f)

    @app.post("/mphf/{mphf_id}/query", response_model=QueryResponse)
    def query_keys(mphf_id: str, req: QueryRequest):
        f = get_mphf(mphf_id)
        return QueryResponse(indices=[f.query(k.encode("utf-8")) for k in req.keys])

    @app.post("/bench/query", response_model=QueryBenchResponse)
    def query_bench(req: QueryBenchRequest):
        f = get_mphf(req.mphf_id)
        if req.n != f.n:
            raise HTTPException(
                status_code=422,
                detail=f"corpus size {req.n} does not match structure size {f.n}",
            )
        corpus = gen_keys(req.n, req.seed)
        report = run_query_bench(f, corpus, prng_seed=req.seed)
        if not report.verified:
            raise HTTPException(
                status_code=409,
                detail="structure is not a bijection over this corpus; "
                "check the corpus seed",
            )
        return QueryBenchResponse(
            n=report.n, ns_per_query=report.ns_per_query, verified=True
        )

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze(req: AnalyzeRequest):
        corpus = gen_keys(req.n, req.seed)
        rows = []
        reports = []
        for lam in req.lambdas:
            try:
                config = BuildConfig(
                    lambda_=lam,
                    partition_size=req.partition_size,
                    global_seed=req.seed,
                    threads=req.threads,
                )
                variants = [
                    _assignment_spec(a, req.epsilon, lam, req.partition_size)
                    for a in req.assignments
                ]
            except (InvalidConfig, ValueError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            for rep in analysis.measure_work(corpus, variants, config):
                reports.append(rep)
                rows.append(
                    AnalyzeRow(
                        assignment=rep.assignment,
                        lambda_=rep.lambda_,
                        partition_size=rep.partition_size,
                        trials_per_key=rep.trials_per_key,
                        bits_per_key=rep.bits_per_key,
                        wall_seconds=rep.wall_seconds,
                    )
                )
        return AnalyzeResponse(rows=rows, csv=analysis.work_csv(reports))

    return app


app = create_app()


def serve(host: str = "127.0.0.1", port: int = 8123) -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")
