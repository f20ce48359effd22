"""FastAPI service wrapping the detector toolchain.

Trained detectors live in an in-process registry keyed by name; stateless
clients can instead pass a saved model file plus the training CSV and have
the detector rebuilt per request.  Every endpoint mirrors one CLI
subcommand.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import __version__, model_io
from ..datasets import load_csv, load_pgm, save_csv, save_heatmap, save_metrics, save_scores_csv
from ..errors import ConfigurationError, FamnovError
from ..evaluation import LabeledScores, auroc, fn_reduction, oracle_threshold
from ..linalg import as_vector, cosine
from ..network import BcosNetwork, TrainConfig, collapse, forward, train
from ..outliers import fit_gaussian, sample_outliers
from ..pipeline import Detector, RunConfig, ScoreSpec, build_detector, run_pipeline
from ..rng import Rng, derive_seed
from ..scoring import score_sample
from . import schemas

__all__ = ["create_app", "app"]


def _detector_from_request(
    registry: dict[str, Detector],
    model: str | None,
    model_file: str | None,
    normals_csv: str | None,
    score: ScoreSpec,
) -> Detector:
    if (model is None) == (model_file is None):
        raise ConfigurationError("pass exactly one of 'model' or 'model_file'")
    if model is not None:
        if model not in registry:
            raise HTTPException(status_code=404, detail=f"no model named {model!r}")
        return registry[model]
    if normals_csv is None:
        raise ConfigurationError("'model_file' also needs 'normals_csv' to rebuild the bank")
    net = model_io.load_model(model_file)
    normals = load_csv(normals_csv, split="train_normal")
    return build_detector(net, normals, score)


def _network_from_request(
    registry: dict[str, Detector], model: str | None, model_file: str | None
) -> BcosNetwork:
    if (model is None) == (model_file is None):
        raise ConfigurationError("pass exactly one of 'model' or 'model_file'")
    if model is not None:
        if model not in registry:
            raise HTTPException(status_code=404, detail=f"no model named {model!r}")
        return registry[model].network
    return model_io.load_model(model_file)


def create_app() -> FastAPI:
    app = FastAPI(title="famnov", version=__version__)
    app.state.detectors = {}

    @app.exception_handler(FamnovError)
    async def _famnov_error(request: Request, exc: FamnovError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    # out-of-range layers/nodes and non-finite payload values are request
    # errors, not server faults
    @app.exception_handler(IndexError)
    async def _index_error(request: Request, exc: IndexError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(
            status="ok", version=__version__, models=sorted(app.state.detectors)
        )

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_model(req: schemas.TrainRequest):
        normals = load_csv(req.normals_csv, split="train_normal")
        if req.outliers_csv is not None:
            outliers = load_csv(req.outliers_csv, split="outlier")
        else:
            gaussian = fit_gaussian(normals)
            n_out = req.n_outliers if req.n_outliers is not None else len(normals)
            outliers = sample_outliers(
                gaussian, n_out, Rng(derive_seed(req.seed, 1)), clamp=req.clamp
            )
        net = BcosNetwork.random(
            req.network.layer_dims, req.network.b_exponent, seed=derive_seed(req.seed, 0)
        )
        trained = train(
            net,
            normals,
            outliers,
            TrainConfig(
                learning_rate=req.train.learning_rate,
                epochs=req.train.epochs,
                batch_size=req.train.batch_size,
                seed=derive_seed(req.seed, 2),
            ),
        )
        detector = build_detector(trained, normals, req.score)
        app.state.detectors[req.name] = detector
        hits = 0
        for table, label in ((normals, 0), (outliers, 1)):
            for row in table.samples:
                logits, _ = forward(trained, row)
                hits += int(np.argmax(logits)) == label
        accuracy = hits / (len(normals) + len(outliers))
        if req.model_out is not None:
            model_io.save_model(trained, req.model_out)
        return schemas.TrainResponse(
            name=req.name,
            layer_dims=trained.layer_dims,
            bank_rows=detector.bank.rows,
            feature_layer=detector.bank.source_layer,
            train_accuracy=accuracy,
            model_file=req.model_out,
        )

    @app.post("/gen-outliers", response_model=schemas.GenOutliersResponse)
    def gen_outliers(req: schemas.GenOutliersRequest):
        normals = load_csv(req.normals_csv, split="train_normal")
        gaussian = fit_gaussian(normals)
        outliers = sample_outliers(
            gaussian, req.count, Rng(derive_seed(req.seed, 1)), clamp=req.clamp
        )
        save_csv(outliers, req.out_csv)
        return schemas.GenOutliersResponse(
            out_csv=req.out_csv, count=len(outliers), dim=outliers.dim, jitter=gaussian.jitter
        )

    @app.post("/score", response_model=schemas.ScoreResponse)
    def score(req: schemas.ScoreRequest):
        detector = _detector_from_request(
            app.state.detectors, req.model, req.model_file, req.normals_csv, req.score
        )
        if (req.samples is None) == (req.input_csv is None):
            raise ConfigurationError("pass exactly one of 'samples' or 'input_csv'")
        labels = None
        if req.samples is not None:
            rows = [as_vector(s) for s in req.samples]
        else:
            table = load_csv(req.input_csv, split="test_normal")
            rows = list(table.samples)
            labels = table.labels
        records = [
            score_sample(detector.network, detector.bank, detector.score_config, row)
            for row in rows
        ]
        ids = [f"sample-{i}" for i in range(len(records))]
        if req.out_csv is not None:
            save_scores_csv(ids, records, labels, req.out_csv)
        return schemas.ScoreResponse(
            records=[
                schemas.ScoreRecordModel(
                    sample_id=ids[i],
                    ffs_raw=r.ffs_raw,
                    ens_raw=r.ens_raw,
                    ffs_norm=r.ffs_norm,
                    ens_norm=r.ens_norm,
                    joint=r.joint,
                    label=None if labels is None else int(labels[i]),
                )
                for i, r in enumerate(records)
            ],
            out_csv=req.out_csv,
        )

    @app.post("/explain", response_model=schemas.ExplainResponse)
    def explain(req: schemas.ExplainRequest):
        net = _network_from_request(app.state.detectors, req.model, req.model_file)
        if (req.sample is None) == (req.input_pgm is None):
            raise ConfigurationError("pass exactly one of 'sample' or 'input_pgm'")
        shape = req.shape
        if req.sample is not None:
            x = as_vector(req.sample)
        else:
            table = load_pgm(req.input_pgm)
            x = table.samples[0]
            shape = shape or table.shape_hint
        logits, trace = forward(net, x)
        explanation = collapse(net, trace, req.layer, req.node)
        explained = trace.inputs[req.layer]
        contributions = explanation * explained
        novelty = 1.0 - cosine(explanation, explained)
        if req.heatmap_out is not None:
            if shape is None:
                raise ConfigurationError("heatmap output needs a (height, width) shape")
            save_heatmap(contributions, shape, req.heatmap_out)
        return schemas.ExplainResponse(
            novelty=novelty,
            logits=[float(v) for v in logits],
            contributions=[float(v) for v in contributions],
            heatmap_out=req.heatmap_out,
        )

    @app.post("/eval", response_model=schemas.EvalResponse)
    def evaluate(req: schemas.EvalRequest):
        from ..datasets import load_scores_csv

        table = load_scores_csv(req.scores_csv)
        if table.labels is None:
            raise ConfigurationError(f"{req.scores_csv} has no labels; metrics need them")
        ls = LabeledScores(table.column(req.column), table.labels, table.ids)
        report = oracle_threshold(ls)
        reduction = None
        if req.baseline_column is not None and req.baseline_column != req.column:
            base = LabeledScores(table.column(req.baseline_column), table.labels, table.ids)
            reduction = fn_reduction(base, ls)
        metrics = {
            "auroc": auroc(ls),
            "threshold": report.threshold,
            "tp": report.tp,
            "fp": report.fp,
            "tn": report.tn,
            "fn": report.fn,
            "fnr": report.fnr,
            "fpr": report.fpr,
        }
        if reduction is not None:
            metrics["fn_reduction"] = reduction
        if req.metrics_out is not None:
            save_metrics(metrics, req.metrics_out)
        return schemas.EvalResponse(**metrics, metrics_out=req.metrics_out)

    @app.post("/pipeline", response_model=schemas.PipelineResponse)
    def pipeline(cfg: RunConfig):
        result = run_pipeline(cfg)
        return schemas.PipelineResponse(
            metrics={k: float(v) for k, v in result.metrics.items()}, files=result.files
        )

    return app


app = create_app()
