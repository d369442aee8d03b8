"""Command-line client for the factseq service.

By default requests go to an in-process instance of the app; pass
``--url http://host:port`` to talk to a running server instead. Exit
codes: 0 success, 2 validation error, 1 anything else.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path

import httpx

from factseq.corpuskit.config import load_config
from factseq.errors import FactseqError

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="factseq", description=__doc__.splitlines()[0])
    p.add_argument("--url", help="base URL of a running service (default: in-process)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen-corpus", help="generate a synthetic corruption corpus")
    s.add_argument("--spec", help="JSON corruption spec (defaults if omitted)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out", required=True)

    for name in ("score-quals", "score-qags"):
        s = sub.add_parser(name, help=f"score a corpus with {name.split('-')[1].upper()}")
        s.add_argument("--corpus", required=True)
        s.add_argument("--model", required=True, help="QAGen checkpoint")
        s.add_argument("--config")
        s.add_argument("--out", required=True)

    s = sub.add_parser("build-sets", help="build the contrastive pair file")
    s.add_argument("--gt-scores", required=True)
    s.add_argument("--model", required=True, help="summarizer checkpoint")
    s.add_argument("--config")
    s.add_argument("--corpus")
    s.add_argument("--reward", choices=["quals", "quals-f1", "rouge-sum"], default="quals")
    s.add_argument("--out", required=True)

    s = sub.add_parser("train", help="MLE-initialize (unless --init) and run contrastive training")
    s.add_argument("--variant", choices=["offline", "online", "weighted", "positive-only"], default="offline")
    s.add_argument("--reward", choices=["quals", "quals-f1", "rouge-sum"], default="quals")
    s.add_argument("--config")
    s.add_argument("--corpus")
    s.add_argument("--init")
    s.add_argument("--qagen")
    s.add_argument("--run-dir")

    s = sub.add_parser("eval", help="decode a corpus and report ROUGE and/or QUALS")
    s.add_argument("--corpus", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--metrics", default="rouge,quals")
    s.add_argument("--config")
    s.add_argument("--qagen")
    s.add_argument("--out")

    s = sub.add_parser("correlate", help="percentile-bin correlation of two score files")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--bins", type=int, default=10)
    s.add_argument("--key-a")
    s.add_argument("--key-b")
    s.add_argument("--out-csv")

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    return p


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FactseqError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise FactseqError(f"{path}: invalid JSON: {exc.msg}") from None


def _payload(args) -> tuple[str, dict]:
    cmd = args.command
    body = {k: v for k, v in vars(args).items() if k not in ("command", "url", "verbose") and v is not None}
    if "config" in body:
        body["config"] = load_config(body["config"]).model_dump()
    if cmd == "gen-corpus":
        body["spec"] = _read_json(args.spec) if args.spec else {}
    elif cmd == "eval":
        body["metrics"] = [m.strip() for m in args.metrics.split(",") if m.strip()]
    return "/" + cmd, body


def post(path: str, body: dict, url: str | None = None) -> httpx.Response:
    """POST to a remote service, or to the app in-process over ASGI."""
    if url:
        with httpx.Client(base_url=url, timeout=None) as client:
            return client.post(path, json=body)
    from factseq.service.app import app

    async def run():
        transport = httpx.ASGITransport(app=app, raise_app_exceptions=False)
        async with httpx.AsyncClient(transport=transport, base_url="http://factseq", timeout=None) as client:
            return await client.post(path, json=body)

    return asyncio.run(run())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "serve":
        import uvicorn
        uvicorn.run("factseq.service.app:app", host=args.host, port=args.port)
        return EXIT_OK
    try:
        path, body = _payload(args)
    except (FactseqError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        resp = post(path, body, args.url)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if resp.status_code in (400, 422):
        detail = resp.json().get("detail")
        print(f"error: {detail if isinstance(detail, str) else json.dumps(detail)}", file=sys.stderr)
        return EXIT_INVALID
    if resp.status_code != 200:
        print(f"error: service returned {resp.status_code}: {resp.text}", file=sys.stderr)
        return EXIT_FAIL
    print(json.dumps(resp.json(), indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
