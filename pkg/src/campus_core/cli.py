"""Ops command line: migrate storage, load fixtures, run either tier,
reset credentials, and pull reports."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import appserver, webapi
from .config import Config
from .errors import CampusError
from .service import CampusCore


def _load_config(path: str | None) -> Config:
    if path:
        return Config.from_file(Path(path))
    default = Path("config/campus.toml")
    if default.exists():
        return Config.from_file(default)
    return Config()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="campus-core",
                                     description="campus information system ops")
    parser.add_argument("--config", help="path to the config file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("migrate", help="create or upgrade the storage schema")

    p = sub.add_parser("load-fixture", help="load a JSON fixture document")
    p.add_argument("file")

    sub.add_parser("serve-app", help="run the application-server tier")
    sub.add_parser("serve-web", help="run the web tier")

    p = sub.add_parser("reset-password", help="issue or reset a person's credential")
    p.add_argument("person_id")

    p = sub.add_parser("report", help="print a statistical report as CSV")
    p.add_argument("kind")
    p.add_argument("--campus")
    p.add_argument("--term")
    p.add_argument("--program")

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )
    config = _load_config(args.config)

    try:
        return _run(args, config)
    except CampusError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 1


def _run(args: argparse.Namespace, config: Config) -> int:
    core = CampusCore(config)

    if args.command == "migrate":
        version = core.migrate()
        print(f"schema at version {version}")
        return 0

    if args.command == "load-fixture":
        core.migrate()
        try:
            counts = core.load_fixture_file(args.file)
        except (OSError, ValueError) as exc:
            print(f"error: cannot read fixture {args.file}: {exc}", file=sys.stderr)
            return 1
        for name in sorted(counts):
            print(f"{name}: {counts[name]}")
        return 0

    if args.command == "serve-app":
        core.migrate()
        server = appserver.AppServer(
            core,
            listen=config.app_listen,
            pool_size=config.worker_pool_size,
            queue_size=config.queue_size,
        )
        appserver.serve_forever(server)
        return 0

    if args.command == "serve-web":
        server = webapi.WebServer(config)
        webapi.serve_forever(server)
        return 0

    if args.command == "reset-password":
        core.migrate()
        username, password = core.auth.reset_password(args.person_id)
        print(f"username: {username}")
        print(f"password: {password}")
        return 0

    if args.command == "report":
        core.migrate()
        filters = {"campus": args.campus, "term": args.term, "program": args.program}
        result = core.reporting.generate(None, args.kind, filters)
        sys.stdout.write(result["csv"])
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
