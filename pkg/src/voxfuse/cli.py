"""Batch command-line front end.

The CLI is a thin client of the HTTP service: every subcommand issues one
request against the service API, by default served in-process (no socket),
or against a remote instance via --server. Machine-readable JSON goes to
stdout, one-line diagnostics to stderr.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx
import uvicorn

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the CLI contract reserves 2 for
    # data errors, so usage problems are remapped to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _parse_point(text: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"point must be x,y,z, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"point must be numeric, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="voxfuse", description=__doc__)
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    rec = sub.add_parser("reconstruct", help="fuse a manifest sequence into snapshots")
    rec.add_argument("--manifest", required=True)
    rec.add_argument("--voxel-size", type=float, default=0.01)
    rec.add_argument("--truncation-voxels", type=int, default=4)
    rec.add_argument("--fusion", choices=["overwrite", "blend"], default="overwrite")
    rec.add_argument("--alpha", type=float, default=0.1)
    rec.add_argument("--out-dir", required=True)
    rec.add_argument("--snapshot-every", type=int, default=None)

    ply = sub.add_parser("export-ply", help="write a snapshot as a binary PLY")
    ply.add_argument("--snapshot", required=True)
    ply.add_argument("--out", required=True)
    ply.add_argument("--colorize", choices=["pca", "none"], default="none")

    qry = sub.add_parser("query", help="nearest feature at a point in a snapshot")
    qry.add_argument("--snapshot", required=True)
    qry.add_argument("--point", type=_parse_point, required=True)
    qry.add_argument("--radius-voxels", type=int, default=2)

    st = sub.add_parser("stats", help="vertex count, feature dim, bounding box")
    st.add_argument("--snapshot", required=True)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8760)
    return parser


async def _request(server: str | None, method: str, path: str, payload: dict):
    if server is None:
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        client = httpx.AsyncClient(transport=transport, base_url="http://voxfuse.local")
    else:
        client = httpx.AsyncClient(base_url=server, timeout=600.0)
    async with client:
        response = await client.request(method, path, json=payload)
    return response.status_code, response.json()


def _diagnose(body) -> str:
    if isinstance(body, dict):
        err = body.get("error")
        if isinstance(err, dict):
            return f"{err.get('type', 'Error')}: {err.get('message', '')}"
        if "detail" in body:  # pydantic request validation
            detail = body["detail"]
            if isinstance(detail, list) and detail:
                first = detail[0]
                loc = ".".join(str(p) for p in first.get("loc", []) if p != "body")
                return f"invalid argument {loc}: {first.get('msg', '')}"
            return str(detail)
    return str(body)


def _call(server: str | None, path: str, payload: dict) -> int:
    try:
        status, body = asyncio.run(_request(server, "POST", path, payload))
    except httpx.HTTPError as e:
        print(f"service unreachable: {e}", file=sys.stderr)
        return DATA_EXIT
    if 200 <= status < 300:
        print(json.dumps(body))
        return 0
    print(_diagnose(body), file=sys.stderr)
    return USAGE_EXIT if status == 422 else DATA_EXIT


def _run_query(server: str | None, args) -> int:
    payload = {
        "snapshot_path": args.snapshot,
        "point": args.point,
        "radius_voxels": args.radius_voxels,
    }
    try:
        status, body = asyncio.run(_request(server, "POST", "/query", payload))
    except httpx.HTTPError as e:
        print(f"service unreachable: {e}", file=sys.stderr)
        return DATA_EXIT
    if 200 <= status < 300:
        print(json.dumps(body["feature"]))
        return 0
    print(_diagnose(body), file=sys.stderr)
    return USAGE_EXIT if status == 422 else DATA_EXIT


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.command == "serve":
        uvicorn.run("voxfuse.service:app", host=args.host, port=args.port)
        return 0
    if args.command == "reconstruct":
        return _call(args.server, "/reconstruct", {
            "manifest_path": args.manifest,
            "out_dir": args.out_dir,
            "voxel_size_m": args.voxel_size,
            "truncation_voxels": args.truncation_voxels,
            "fusion_mode": args.fusion,
            "alpha": args.alpha,
            "snapshot_every": args.snapshot_every,
        })
    if args.command == "export-ply":
        return _call(args.server, "/export-ply", {
            "snapshot_path": args.snapshot,
            "out_path": args.out,
            "colorize": args.colorize,
        })
    if args.command == "query":
        return _run_query(args.server, args)
    if args.command == "stats":
        return _call(args.server, "/stats", {"snapshot_path": args.snapshot})
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
