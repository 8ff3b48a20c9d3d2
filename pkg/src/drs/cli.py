"""Operator command line: serve the API, bootstrap the first admin,
provision users in bulk, rebuild/verify the index, inspect the store.

Exit codes: 0 success, 1 usage error, 2 data error. ``--data-dir`` defaults
to the DRS_DATA_DIR environment variable. Every command locks the data
directory, so nothing here can race a running server.
"""

from __future__ import annotations

import csv
import signal
import sys
from pathlib import Path

import click
import uvicorn

from .api import create_app
from .auth import DEGREES
from .errors import DrsError, ValidationError
from .service import DrsService

_DATA_DIR_OPTION = click.option(
    "--data-dir",
    envvar="DRS_DATA_DIR",
    required=True,
    type=click.Path(path_type=Path),
    help="Data directory (or set DRS_DATA_DIR).",
)


@click.group()
def cli() -> None:
    """Dissertation repository service operations."""


@cli.command()
@_DATA_DIR_OPTION
@click.option("--listen", default="127.0.0.1:8000", show_default=True, help="addr:port to bind.")
@click.option("--cors-origin", multiple=True, help="Origin allowed to call the API (repeatable).")
def serve(data_dir: Path, listen: str, cors_origin: tuple[str, ...]) -> None:
    """Run the HTTP API until terminated; SIGTERM shuts down cleanly."""
    host, sep, port_text = listen.rpartition(":")
    if not sep or not host or not port_text.isdigit():
        raise click.UsageError(f"--listen must be addr:port, got {listen!r}")
    service = DrsService.open(data_dir)
    try:
        app = create_app(service, cors_origins=list(cors_origin))
        # uvicorn drains in-flight requests on SIGTERM, then re-raises the
        # signal; a planned stop must still exit 0
        signal.signal(signal.SIGTERM, lambda signum, frame: sys.exit(0))
        uvicorn.run(app, host=host, port=int(port_text), log_level="info")
    finally:
        service.close()


@cli.command("bootstrap-admin")
@_DATA_DIR_OPTION
@click.option("--username", required=True)
@click.option("--password", required=True)
@click.option("--matrix", required=True, help="Matrix number for the admin account.")
@click.option("--name", required=True, help="Full name of the admin.")
@click.option("--degree", default="PhD", show_default=True, type=click.Choice(DEGREES))
def bootstrap_admin(
    data_dir: Path, username: str, password: str, matrix: str, name: str, degree: str
) -> None:
    """Create the first admin account; refuses if one already exists."""
    with DrsService.open(data_dir) as service:
        user = service.auth.bootstrap_admin(username, password, matrix, name, degree)
        click.echo(f"admin {user.username} created (matrix {user.matrix_number})")


@cli.command("provision-batch")
@_DATA_DIR_OPTION
@click.option(
    "--csv",
    "csv_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="CSV with columns matrix_number,full_name,degree.",
)
def provision_batch(data_dir: Path, csv_path: Path) -> None:
    """Provision users from a CSV; each row commits on its own, so good rows
    land even when others fail."""
    with csv_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"matrix_number", "full_name", "degree"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValidationError(
                f"CSV must have columns {', '.join(sorted(required))}; got {reader.fieldnames}"
            )
        rows = list(reader)
    ok = 0
    failed = 0
    with DrsService.open(data_dir) as service:
        for line_no, row in enumerate(rows, start=2):
            try:
                service.auth.provision_direct(
                    row["matrix_number"] or "", row["full_name"] or "", row["degree"] or ""
                )
                ok += 1
            except DrsError as exc:
                failed += 1
                click.echo(f"row {line_no}: {exc.code} {exc.message}")
    click.echo(f"{ok} ok, {failed} failed")


@cli.command()
@_DATA_DIR_OPTION
def reindex(data_dir: Path) -> None:
    """Rebuild the search index from the catalog and sweep referential
    integrity; fails if another process holds the directory."""
    with DrsService.open(data_dir) as service:
        problems = service.verify_integrity()
        terms = sum(1 for _ in service.store.state.dissertations)
        click.echo(
            f"indexed {service.index.doc_count} documents from {terms} catalog records"
        )
        if problems:
            for problem in problems:
                click.echo(f"integrity: {problem}", err=True)
            raise DrsError(f"{len(problems)} integrity problems found")
        click.echo("integrity ok")


@cli.command()
@_DATA_DIR_OPTION
def info(data_dir: Path) -> None:
    """Print collection counts for a data directory."""
    with DrsService.open(data_dir) as service:
        state = service.store.state
        provisioned = sum(1 for u in state.users.values() if u["status"] == "Provisioned")
        admins = sum(1 for u in state.users.values() if u["role"] == "Admin")
        blobs = sum(1 for _ in service.store.iter_blob_hashes())
        click.echo(f"users: {len(state.users)} ({provisioned} provisioned, {admins} admins)")
        click.echo(f"dissertations: {len(state.dissertations)}")
        click.echo(f"favorites lists: {len(state.favorites)}")
        click.echo(f"sessions: {len(state.sessions)}")
        click.echo(f"blobs: {blobs}")


def main(argv: list[str] | None = None) -> None:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except DrsError as exc:
        click.echo(f"error: {exc.message}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
