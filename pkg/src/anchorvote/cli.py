"""Command-line interface: a thin client of the HTTP service.

Every subcommand is one request to the corresponding endpoint.  Without
``--server`` the app runs in-process (same filesystem, no daemon needed);
with ``--server http://host:port`` the same requests go over the wire.

Exit codes: 0 success, 2 usage/configuration errors, 1 runtime errors.
"""

from __future__ import annotations

import argparse
import sys


class CliFailure(Exception):
    def __init__(self, message, code=1):
        super().__init__(message)
        self.code = code


class ServiceClient:
    """POSTs JSON to the service, in-process by default."""

    def __init__(self, server: str | None = None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # some starlette/httpx pairings deprecate the test client base
                warnings.filterwarnings("ignore", message="Using `httpx` with")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._client.post(path, json=payload)
        except Exception as exc:
            raise CliFailure(f"cannot reach service: {exc}", code=1) from exc
        if resp.status_code == 200:
            return resp.json()
        try:
            body = resp.json()
            message = body.get("message") or body.get("detail") or resp.text
        except ValueError:
            message = resp.text
        code = 2 if resp.status_code in (400, 422) else 1
        raise CliFailure(f"{message}", code=code)


def _cmd_gen_data(client: ServiceClient, args) -> int:
    out = client.post("/datasets/generate", {
        "spec_path": args.spec,
        "out_train": args.out_train,
        "out_test": args.out_test,
    })
    print(f"wrote {out['train_records']} train records to {args.out_train}")
    print(f"wrote {out['test_records']} test records "
          f"({out['test_groups']} groups) to {args.out_test}")
    print(f"nearest-centroid ceiling: {out['centroid_ceiling']:.6g}")
    return 0


def _cmd_train(client: ServiceClient, args) -> int:
    out = client.post("/train", {
        "config_path": args.config,
        "data_path": args.data,
        "model_path": args.model,
        "log_path": args.log,
    })
    print(f"trained on {out['examples']} examples -> {out['model_path']}")
    return 0


def _cmd_predict(client: ServiceClient, args) -> int:
    out = client.post("/predict", {
        "model_path": args.model,
        "data_path": args.data,
        "out_path": args.out,
    })
    print(f"predicted {out['groups']} groups, accuracy {out['accuracy']:.6g}")
    return 0


def _cmd_eval(client: ServiceClient, args) -> int:
    out = client.post("/eval", {
        "config_path": args.config,
        "train_path": args.train,
        "test_path": args.test,
        "variants": [v for v in args.variants.split(",") if v],
        "format": args.format,
    })
    sys.stdout.write(out["report"])
    return 0


def _cmd_simulate(client: ServiceClient, args) -> int:
    out = client.post("/simulate", {
        "config_path": args.config,
        "train_path": args.train,
        "test_path": args.test,
        "trace_path": args.trace,
    })
    print(f"simulated accuracy {out['accuracy']:.6g} over {out['groups']} groups")
    print(f"learn: {out['learn_cycles_per_vector']} cycles/vector"
          f" ({out['learn_latency_ns']:.6g} ns)")
    print(f"classify: {out['classify_cycles_per_group']} cycles/group"
          f" ({out['classify_latency_ns']:.6g} ns),"
          f" {out['classify_cycles_consumed']} cycles consumed")
    if args.trace:
        print(f"trace written to {args.trace}")
    return 0


def _cmd_report_resources(client: ServiceClient, args) -> int:
    out = client.post("/resources", {"config_path": args.config})
    print(f"anchor memory bits: {out['anchor_memory_bits']}")
    print(f"counter memory bits: {out['counter_memory_bits']}")
    print(f"total memory bits: {out['total_memory_bits']}")
    print(f"dsp count: {out['dsp_count']}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anchorvote", description=__doc__)
    parser.add_argument("--server", default=None,
                        help="service base URL (default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic train/test pair")
    p.add_argument("--spec", required=True, help="synthetic spec file (key = value)")
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train", help="train a model on a dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--log", default=None, help="write a replay log here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict a dataset with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="train and evaluate the requested variants")
    p.add_argument("--config", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--variants", default="float,quant,sim",
                   help="comma-separated subset of float,quant,sim")
    p.add_argument("--format", default="text", choices=["text", "csv", "json-lines"])
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("simulate", help="run the cycle-accurate simulator")
    p.add_argument("--config", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--trace", default=None, help="write a per-cycle trace here")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("report-resources", help="closed-form resource model")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_report_resources)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        client = ServiceClient(args.server)
        return args.func(client, args)
    except CliFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
