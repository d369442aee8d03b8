"""FastAPI wrapper around the toolkit; one POST endpoint per CLI subcommand.

Domain validation failures (bad files, configs, specs) come back as 422
with a ``detail`` string, the same status FastAPI uses for malformed
request bodies.
"""
from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from factseq import __version__
from factseq.errors import FactseqError
from factseq.service import ops
from factseq.service.schemas import (
    BuildSetsRequest,
    CorrelateRequest,
    CorrelateResponse,
    EvalRequest,
    EvalResponse,
    GenCorpusRequest,
    ScoreRequest,
    ScoreSummary,
    TrainRequest,
)

log = logging.getLogger(__name__)

app = FastAPI(title="factseq", version=__version__)


@app.exception_handler(FactseqError)
async def _domain_error(request: Request, exc: FactseqError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(FileNotFoundError)
async def _missing_file(request: Request, exc: FileNotFoundError):
    return JSONResponse(status_code=422, content={"detail": f"file not found: {exc.filename or exc}"})


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/gen-corpus")
def gen_corpus(req: GenCorpusRequest) -> dict:
    return ops.gen_corpus(req.spec, req.n, req.out)


@app.post("/score-quals", response_model=ScoreSummary)
def score_quals(req: ScoreRequest):
    return ops.score_quals(req.corpus, req.model, req.config, req.out)


@app.post("/score-qags", response_model=ScoreSummary)
def score_qags(req: ScoreRequest):
    return ops.score_qags(req.corpus, req.model, req.config, req.out)


@app.post("/build-sets")
def build_sets(req: BuildSetsRequest) -> dict:
    return ops.build_sets(req.gt_scores, req.model, req.config, req.out, req.corpus, req.reward)


@app.post("/train")
def train(req: TrainRequest) -> dict:
    return ops.train(req.variant, req.reward, req.config, req.corpus, req.init, req.qagen, req.run_dir)


@app.post("/eval", response_model=EvalResponse)
def evaluate(req: EvalRequest):
    return ops.evaluate(req.corpus, req.model, list(req.metrics), req.config, req.qagen, req.out)


@app.post("/correlate", response_model=CorrelateResponse)
def correlate(req: CorrelateRequest):
    return ops.correlate(req.a, req.b, req.bins, req.key_a, req.key_b, req.out_csv)
