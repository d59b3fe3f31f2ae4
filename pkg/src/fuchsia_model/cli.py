"""Command-line front end.

Results go to stdout, diagnostics and errors to stderr. Exit codes: 0 ok,
1 configuration or I/O failure, 2 broken route or invalid manifest, 3
tampered package.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

from . import namespace, pkg
from .manifest import ManifestError, parse_manifest, validate_manifest
from .routing import RouteError, RouteRequest, export_dot, resolve_route, route_all
from .topology import TopologyError
from .workspace import ConfigError, WorkspaceConfig, load_workspace

EXIT_OK = 0
EXIT_IO = 1
EXIT_BROKEN = 2
EXIT_TAMPERED = 3


class _Abort(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _workspace(args) -> WorkspaceConfig:
    if not args.workspace:
        raise _Abort(EXIT_IO, "this command needs --workspace FILE")
    try:
        return load_workspace(args.workspace)
    except ConfigError as exc:
        raise _Abort(EXIT_IO, str(exc)) from None


def _tree(args):
    ws = _workspace(args)
    try:
        return ws.build_tree()
    except (TopologyError, ManifestError) as exc:
        raise _Abort(EXIT_IO, f"cannot build instance tree: {type(exc).__name__}: {exc}") from None


def _include_loader(base: Path, ws: Optional[WorkspaceConfig]):
    roots = [base] + (ws.include_roots if ws else [])

    def load(rel: str) -> str:
        for root in roots:
            candidate = root / rel
            if candidate.is_file():
                return candidate.read_text(encoding="utf-8")
        raise FileNotFoundError(rel)

    return load


def cmd_validate(args, out: TextIO, err: TextIO) -> int:
    ws = _workspace(args) if args.workspace else None
    io_failed = invalid = False
    for name in args.paths:
        path = Path(name)
        try:
            text = path.read_bytes()
        except OSError as exc:
            err.write(f"IOError {name} {exc.strerror or exc}\n")
            io_failed = True
            continue
        try:
            manifest = parse_manifest(text, loader=_include_loader(path.parent, ws))
        except ManifestError as exc:
            err.write(f"{exc.code} {name} {exc.line}:{exc.col} {exc.message}\n")
            invalid = True
            continue
        diags = validate_manifest(manifest)
        for d in diags:
            err.write(d.render(name) + "\n")
        invalid = invalid or bool(diags)
    if io_failed:
        return EXIT_IO
    return EXIT_BROKEN if invalid else EXIT_OK


def cmd_tree(args, out: TextIO, err: TextIO) -> int:
    out.write(_tree(args).render())
    return EXIT_OK


def _parse_capability(spec: str) -> tuple[str, str]:
    cap_type, sep, name = spec.partition("/")
    if not sep or not cap_type or not name:
        raise _Abort(EXIT_IO, f"capability must be <type>/<name>, got {spec!r}")
    return cap_type, name


def _hop_lines(hops) -> str:
    return "".join(f"{n}. {h.moniker} {h.kind} {h.decl.name}\n" for n, h in enumerate(hops, start=1))


def cmd_route(args, out: TextIO, err: TextIO) -> int:
    tree = _tree(args)
    cap_type, name = _parse_capability(args.capability)
    try:
        req = RouteRequest(args.moniker, cap_type, name)
        result = resolve_route(tree, req)
    except RouteError as exc:
        out.write(_hop_lines(exc.hops))
        err.write(f"{exc.kind} at {exc.at}: {exc}\n")
        return EXIT_BROKEN
    except TopologyError as exc:
        raise _Abort(EXIT_IO, f"{type(exc).__name__}: {exc}") from None
    out.write(_hop_lines(result.hops))
    for d in result.diagnostics:
        err.write(f"{d.code} at {d.at}: {d.message}\n")
    return EXIT_OK


def route_summary(req: RouteRequest, outcome) -> str:
    head = f"{req.requester} {req.cap_type}/{req.name}"
    if outcome.ok:
        return f"{head} -> {outcome.provider}\n"
    return f"{head} !{outcome.kind} at {outcome.at}\n"


def cmd_route_all(args, out: TextIO, err: TextIO) -> int:
    tree = _tree(args)
    results = route_all(tree)
    for req, outcome in results:
        out.write(route_summary(req, outcome))
    if args.dot:
        try:
            Path(args.dot).write_text(export_dot(tree, results), encoding="utf-8")
        except OSError as exc:
            raise _Abort(EXIT_IO, f"cannot write {args.dot}: {exc.strerror or exc}") from None
    return EXIT_OK if all(o.ok for _, o in results) else EXIT_BROKEN


def cmd_ns(args, out: TextIO, err: TextIO) -> int:
    tree = _tree(args)
    try:
        ns = namespace.build_namespace(tree, args.moniker, route_all(tree))
    except TopologyError as exc:
        raise _Abort(EXIT_IO, f"{type(exc).__name__}: {exc}") from None
    out.write(ns.render())
    return EXIT_OK


def cmd_pkg_build(args, out: TextIO, err: TextIO) -> int:
    root = Path(args.dir)
    if not root.is_dir():
        raise _Abort(EXIT_IO, f"not a directory: {args.dir}")
    try:
        _, meta = pkg.build_package_dir(root, args.name, args.version)
    except pkg.PackageError as exc:
        raise _Abort(EXIT_IO, f"{type(exc).__name__}: {exc}") from None
    except OSError as exc:
        raise _Abort(EXIT_IO, f"{exc.filename}: {exc.strerror or exc}") from None
    out.write(meta.contents.decode("utf-8"))
    return EXIT_OK


_FAILURE_TAGS = {"Mismatch": "MISMATCH", "MissingFile": "MISSING", "ExtraFile": "EXTRA"}


def cmd_pkg_verify(args, out: TextIO, err: TextIO) -> int:
    root = Path(args.dir)
    if not root.is_dir():
        raise _Abort(EXIT_IO, f"not a directory: {args.dir}")
    try:
        report = pkg.verify_package(root)
    except pkg.MetaCorrupt as exc:
        err.write(f"MetaCorrupt {args.dir}: {exc}\n")
        return EXIT_TAMPERED
    except OSError as exc:
        raise _Abort(EXIT_IO, f"{exc.filename}: {exc.strerror or exc}") from None
    if report.ok:
        out.write(f"OK {report.name} {report.version}\n")
        return EXIT_OK
    for kind, path in report.failures():
        out.write(f"{_FAILURE_TAGS[kind]} {path}\n")
    return EXIT_TAMPERED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fuchsia-model", description="Component manifests, routing and packages.")
    p.add_argument("--workspace", metavar="FILE", help="workspace file mapping component URLs to manifests")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="parse and check manifest files")
    s.add_argument("paths", nargs="+")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("tree", help="print the component instance tree")
    s.set_defaults(func=cmd_tree)

    s = sub.add_parser("route", help="resolve one capability request")
    s.add_argument("moniker")
    s.add_argument("capability", metavar="TYPE/NAME")
    s.set_defaults(func=cmd_route)

    s = sub.add_parser("route-all", help="resolve every use declaration")
    s.add_argument("--dot", metavar="FILE", help="also write a DOT graph of the routes")
    s.set_defaults(func=cmd_route_all)

    s = sub.add_parser("ns", help="print a component's namespace")
    s.add_argument("moniker")
    s.set_defaults(func=cmd_ns)

    s = sub.add_parser("pkg", help="build or verify a package directory")
    psub = s.add_subparsers(dest="pkg_command", required=True)
    b = psub.add_parser("build")
    b.add_argument("dir")
    b.add_argument("--name", required=True)
    b.add_argument("--version", required=True)
    b.set_defaults(func=cmd_pkg_build)
    v = psub.add_parser("verify")
    v.add_argument("dir")
    v.set_defaults(func=cmd_pkg_verify)
    return p


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out, err)
    except _Abort as exc:
        err.write(f"error: {exc}\n")
        return exc.code


def main_entry() -> None:
    sys.exit(main())
