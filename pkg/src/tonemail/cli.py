"""Desk-scale command line driver.

``tonemail run`` executes a session script against the in-process service,
``tonemail store`` inspects and audits the durable store, ``tonemail
fixtures`` materializes the bundled demo scenarios as ready-to-run scripts,
and ``tonemail serve`` hosts the HTTP API.

Exit codes: 0 success, 1 unexpected failure, 2 configuration/usage, 3
validation, 4 illegal state, 5 gateway, 6 schema, 7 storage, 8 not found,
9 segmentation, 10 rewrite scope.
"""

from __future__ import annotations

import json
import re
import sys
from pathlib import Path

import click

from . import scenarios as scenario_lib
from .config import AppConfig, build_service
from .errors import (
    ConfigError,
    GatewayError,
    NoOpEditError,
    NotFoundError,
    SchemaError,
    ScopeError,
    SegmentationError,
    StateError,
    StorageError,
    ToneMailError,
    ValidationError,
)
from .runner import ScriptRunner, load_script
from .store import ReuseStore, verify_store_file

EXIT_CODES: list[tuple[type, int]] = [
    (ConfigError, 2),
    (ValidationError, 3),
    (NoOpEditError, 3),
    (StateError, 4),
    (GatewayError, 5),
    (SchemaError, 6),
    (StorageError, 7),
    (NotFoundError, 8),
    (SegmentationError, 9),
    (ScopeError, 10),
]


def _exit_code(error: ToneMailError) -> int:
    for error_type, code in EXIT_CODES:
        if isinstance(error, error_type):
            return code
    return 1


def _fail(error: ToneMailError) -> None:
    payload = {"code": error.code, "message": error.message, "details": error.details}
    click.echo(json.dumps(payload, ensure_ascii=False), err=True)
    sys.exit(_exit_code(error))


def _load_config(config_path: str | None) -> AppConfig:
    return AppConfig.load(config_path) if config_path else AppConfig()


@click.group()
def main():
    """Tone-aware email composition engine."""


@main.command("run")
@click.argument("script_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--mock", "transcript_file", type=click.Path(exists=True, dir_okay=False),
              help="Run offline against this mock transcript.")
@click.option("--live", is_flag=True, help="Run against the configured LLM provider.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_path", type=click.Path(dir_okay=False),
              help="Override the store file path.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              help="Also write the final email to this file.")
def run_script(script_file, transcript_file, live, config_path, store_path, out_path):
    """Execute a session script; final email to stdout, summary to stderr."""
    if bool(transcript_file) == live:
        raise click.UsageError("exactly one of --mock TRANSCRIPT or --live is required")
    try:
        config = _load_config(config_path)
        if store_path:
            config.store_path = store_path
        if transcript_file:
            config.gateway.mode = "mock"
            config.gateway.transcript_path = transcript_file
        else:
            config.gateway.mode = "live"
        service = build_service(config)  # --live fails here if the key is missing
        steps = load_script(script_file)
        outcome = ScriptRunner(service).run(steps)
    except ToneMailError as error:
        _fail(error)
        return
    final_body = outcome.final_body
    if final_body is None and outcome.session.draft is not None:
        final_body = outcome.session.draft.body
    if final_body is not None:
        click.echo(final_body)
        if out_path:
            Path(out_path).write_text(final_body + "\n", encoding="utf-8", newline="\n")
    summary = outcome.summary or {"steps": len(outcome.step_results)}
    click.echo(json.dumps({"summary": summary, "steps": outcome.step_results},
                          ensure_ascii=False, indent=2), err=True)


# ---------------------------------------------------------------------------
# Store inspection
# ---------------------------------------------------------------------------


def _open_store(store_path: str | None, config_path: str | None) -> ReuseStore:
    config = _load_config(config_path)
    return ReuseStore(store_path or config.store_path)


@main.group("store")
def store_group():
    """Inspect, audit, and port the anchors/stylebook store."""


@store_group.command("list-anchors")
@click.option("--store", "store_path", type=click.Path(dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def list_anchors(store_path, config_path):
    try:
        store = _open_store(store_path, config_path)
        for anchor in store.list_anchors():
            click.echo(f"{anchor.anchor_id}\t{anchor.kind.value}\t{anchor.name}")
    except ToneMailError as error:
        _fail(error)


@store_group.command("list-records")
@click.option("--store", "store_path", type=click.Path(dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def list_records(store_path, config_path):
    try:
        store = _open_store(store_path, config_path)
        for record in store.list_records():
            click.echo(f"{record.record_id}\t{record.modification_name}\t"
                       f"used={record.usage_count} accepted={record.acceptance_count}")
    except ToneMailError as error:
        _fail(error)


@store_group.command("export")
@click.argument("dest", type=click.Path(dir_okay=False))
@click.option("--store", "store_path", type=click.Path(dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def export_store(dest, store_path, config_path):
    try:
        _open_store(store_path, config_path).export(dest)
        click.echo(f"exported to {dest}")
    except ToneMailError as error:
        _fail(error)


@store_group.command("import")
@click.argument("src", type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_path", type=click.Path(dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def import_store(src, store_path, config_path):
    try:
        anchors, records = _open_store(store_path, config_path).import_from(src)
        click.echo(f"imported {anchors} anchors, {records} records")
    except ToneMailError as error:
        _fail(error)


@store_group.command("verify")
@click.option("--store", "store_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
def verify_store(store_path):
    """Run every store invariant; nonzero exit when violations are found."""
    try:
        report = verify_store_file(store_path)
    except ToneMailError as error:
        _fail(error)
        return
    if report.ok:
        click.echo("store verification: clean")
        return
    for issue in report.issues:
        click.echo(f"VIOLATION [{issue.code}] {issue.message}")
    sys.exit(3)


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@main.group("fixtures")
def fixtures_group():
    """Bundled demo writing tasks."""


@fixtures_group.command("list")
def fixtures_list():
    for scenario in scenario_lib.list_scenarios():
        click.echo(f"{scenario.category}\t{scenario.name}")


def _slugify(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


@fixtures_group.command("emit")
@click.argument("name")
@click.option("--out", "out_path", type=click.Path(dir_okay=False))
def fixtures_emit(name, out_path):
    """Write the named scenario as a ready-to-run script file."""
    try:
        scenario = scenario_lib.get_scenario(name)
    except NotFoundError as error:
        click.echo(f"error: {error.message}", err=True)
        for available in error.details.get("available", []):
            click.echo(f"  - {available}", err=True)
        sys.exit(8)
    script = scenario_lib.default_script(scenario)
    path = Path(out_path or f"{_slugify(scenario.name)}.json")
    path.write_text(json.dumps(script, ensure_ascii=False, indent=2) + "\n",
                    encoding="utf-8", newline="\n")
    click.echo(str(path))


# ---------------------------------------------------------------------------
# HTTP server
# ---------------------------------------------------------------------------


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8008, show_default=True, type=int)
@click.option("--static-dir", type=click.Path(exists=True, file_okay=False),
              help="Also serve a browser-client bundle under /app.")
def serve(config_path, host, port, static_dir):
    """Host the HTTP JSON API (requires uvicorn)."""
    try:
        import uvicorn
    except ImportError:
        raise click.UsageError("uvicorn is not installed; pip install tonemail[server]")
    from .api import create_app
    try:
        service = build_service(_load_config(config_path))
    except ToneMailError as error:
        _fail(error)
        return
    uvicorn.run(create_app(service, static_dir=static_dir),
                host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
