"""Command-line client for the detector service.

Every subcommand is a thin wrapper over one HTTP endpoint.  By default the
service runs in-process, so the CLI works standalone; pass ``--url`` to talk
to a running server instead.  Each flag has a config-file equivalent: the
JSON file given with ``--config`` supplies the request body and explicit
flags override individual fields.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import httpx

__all__ = ["main", "entrypoint"]


def _client(url: str | None) -> httpx.Client:
    if url:
        return httpx.Client(base_url=url, timeout=600.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # test-client import warns on some stacks
        from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app())


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        body = json.load(fh)
    if not isinstance(body, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return body


def _put(body: dict, dotted: str, value) -> None:
    """Set a possibly nested field, but only when the flag was given."""
    if value is None:
        return
    keys = dotted.split(".")
    node = body
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",")]


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",")]


def _post(client: httpx.Client, path: str, body: dict, as_json: bool) -> tuple[int, dict]:
    response = client.post(path, json=body)
    try:
        payload = response.json()
    except ValueError:
        payload = {"detail": response.text}
    if response.status_code != 200:
        detail = payload.get("detail", payload)
        print(f"error: {detail}", file=sys.stderr)
        return 1, {}
    if as_json:
        print(json.dumps(payload, indent=2))
    return 0, payload


def _network_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--layer-dims", type=_ints, help="comma list, e.g. 12,16,8,2")
    parser.add_argument("--b-exponent", type=_floats, help="single value or comma list per layer")
    parser.add_argument("--learning-rate", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int)


def _score_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=int)
    parser.add_argument("--novelty-layer", type=int)
    parser.add_argument("--target-node", type=int)
    parser.add_argument("--joint-weight", type=float)
    parser.add_argument("--feature-layer", type=int)


def _apply_network_flags(body: dict, args) -> None:
    dims = getattr(args, "layer_dims", None)
    _put(body, "network.layer_dims", dims)
    b = getattr(args, "b_exponent", None)
    if b is not None:
        _put(body, "network.b_exponent", b[0] if len(b) == 1 else b)
    _put(body, "train.learning_rate", args.learning_rate)
    _put(body, "train.epochs", args.epochs)
    _put(body, "train.batch_size", args.batch_size)


def _apply_score_flags(body: dict, args) -> None:
    _put(body, "score.k", args.k)
    _put(body, "score.novelty_layer", args.novelty_layer)
    _put(body, "score.target_node", args.target_node)
    _put(body, "score.joint_weight", args.joint_weight)
    _put(body, "score.feature_layer", args.feature_layer)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="famnov", description="familiarity + novelty anomaly detection"
    )
    parser.add_argument("--url", help="base URL of a running service (default: in-process)")
    parser.add_argument("--json", action="store_true", help="print the raw response JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a detector on normal data")
    p.add_argument("--config", help="JSON file with the request body")
    p.add_argument("--name")
    p.add_argument("--normals", dest="normals_csv")
    p.add_argument("--outliers", dest="outliers_csv")
    p.add_argument("--n-outliers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--model-out")
    _network_flags(p)
    _score_flags(p)

    p = sub.add_parser("gen-outliers", help="sample synthetic outliers from a Gaussian fit")
    p.add_argument("--config")
    p.add_argument("--normals", dest="normals_csv")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="out_csv")
    p.add_argument("--clamp", type=float, nargs=2, metavar=("LO", "HI"))

    p = sub.add_parser("score", help="score test samples")
    p.add_argument("--config")
    p.add_argument("--model")
    p.add_argument("--model-file")
    p.add_argument("--normals", dest="normals_csv")
    p.add_argument("--input", dest="input_csv")
    p.add_argument("--out", dest="out_csv")
    _score_flags(p)

    p = sub.add_parser("explain", help="input-space explanation for one sample")
    p.add_argument("--config")
    p.add_argument("--model")
    p.add_argument("--model-file")
    p.add_argument("--input", dest="input_pgm", help="P5 graymap to explain")
    p.add_argument("--sample", type=_floats, help="inline comma-separated vector")
    p.add_argument("--node", type=int)
    p.add_argument("--layer", type=int)
    p.add_argument("--out", dest="heatmap_out")
    p.add_argument("--shape", type=int, nargs=2, metavar=("H", "W"))

    p = sub.add_parser("eval", help="metrics from a score file")
    p.add_argument("--config")
    p.add_argument("--scores", dest="scores_csv")
    p.add_argument("--column")
    p.add_argument("--baseline-column")
    p.add_argument("--out", dest="metrics_out")

    p = sub.add_parser("pipeline", help="full run from a config file")
    p.add_argument("--config", required=True, help="JSON RunConfig")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        body = _load_config(getattr(args, "config", None))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        client = _client(args.url)
        return _dispatch(client, args, body)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 1


def _dispatch(client: httpx.Client, args, body: dict) -> int:
    with client:
        if args.command == "train":
            for field in ("name", "normals_csv", "outliers_csv", "n_outliers", "seed", "model_out"):
                _put(body, field, getattr(args, field))
            _apply_network_flags(body, args)
            _apply_score_flags(body, args)
            code, payload = _post(client, "/train", body, args.json)
            if code == 0 and not args.json:
                print(
                    f"trained '{payload['name']}': dims {payload['layer_dims']}, "
                    f"bank {payload['bank_rows']} rows, "
                    f"train accuracy {payload['train_accuracy']:.3f}"
                )
                if payload.get("model_file"):
                    print(f"model written to {payload['model_file']}")
            return code

        if args.command == "gen-outliers":
            for field in ("normals_csv", "count", "seed", "out_csv"):
                _put(body, field, getattr(args, field))
            _put(body, "clamp", list(args.clamp) if args.clamp else None)
            code, payload = _post(client, "/gen-outliers", body, args.json)
            if code == 0 and not args.json:
                print(f"wrote {payload['count']} outliers ({payload['dim']} dims) to {payload['out_csv']}")
            return code

        if args.command == "score":
            for field in ("model", "model_file", "normals_csv", "input_csv", "out_csv"):
                _put(body, field, getattr(args, field))
            _apply_score_flags(body, args)
            code, payload = _post(client, "/score", body, args.json)
            if code == 0 and not args.json:
                records = payload["records"]
                for rec in records:
                    print(
                        f"{rec['sample_id']}: joint={rec['joint']:.6f} "
                        f"ffs={rec['ffs_raw']:.6f} ens={rec['ens_raw']:.6f}"
                    )
                if payload.get("out_csv"):
                    print(f"scores written to {payload['out_csv']}")
            return code

        if args.command == "explain":
            for field in ("model", "model_file", "input_pgm", "sample", "node", "layer", "heatmap_out"):
                _put(body, field, getattr(args, field))
            _put(body, "shape", list(args.shape) if args.shape else None)
            code, payload = _post(client, "/explain", body, args.json)
            if code == 0 and not args.json:
                print(f"novelty={payload['novelty']:.6f} logits={payload['logits']}")
                if payload.get("heatmap_out"):
                    print(f"heatmap written to {payload['heatmap_out']}")
            return code

        if args.command == "eval":
            for field in ("scores_csv", "column", "baseline_column", "metrics_out"):
                _put(body, field, getattr(args, field))
            code, payload = _post(client, "/eval", body, args.json)
            if code == 0 and not args.json:
                keys = ("auroc", "threshold", "tp", "fp", "tn", "fn", "fnr", "fpr", "fn_reduction")
                for key in keys:
                    if payload.get(key) is not None:
                        print(f"{key}={payload[key]}")
            return code

        if args.command == "pipeline":
            _put(body, "seed", args.seed)
            _put(body, "out_dir", args.out_dir)
            code, payload = _post(client, "/pipeline", body, args.json)
            if code == 0 and not args.json:
                for key, value in payload["metrics"].items():
                    print(f"{key}={value}")
                for role, path in payload["files"].items():
                    print(f"{role}: {path}")
            return code

    raise AssertionError(f"unhandled command {args.command}")


def entrypoint() -> None:
    sys.exit(main())
