"""Command line entry points.

One binary with subcommands for ingesting document batches, querying a
store at a point in time, running the synthetic evaluation, serving the
HTTP API, exporting records, and drafting a predicate schema from raw
documents. Every command is deterministic given fixed inputs and seed.
"""
from __future__ import annotations

import json
import sys
from datetime import date, datetime
from pathlib import Path
from typing import Optional

import click

from .canonicalize import AliasTable, EMPTY_ALIASES, Schema, discover_schema
from .config import Config
from .extraction import Document, RuleExtractor, extract_document
from .index import NuggetEngine
from .model import SourceType, View
from .pipeline import ingest_documents
from .retrieval import Query, retrieve

EXIT_BAD_INPUT = 2
EXIT_NO_SCHEMA = 3


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _read_docs(path: str) -> list[Document]:
    """Parse a JSONL file of documents; problems exit with code 2."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(EXIT_BAD_INPUT, f"cannot read {path}: {exc}")
    docs = []
    for ln, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            ts = row["timestamp"]
            # Accept full datetimes but keep day precision.
            day = (
                datetime.fromisoformat(ts).date()
                if "T" in ts
                else date.fromisoformat(ts)
            )
            docs.append(
                Document(
                    doc_id=str(row["doc_id"]),
                    timestamp=day,
                    text=str(row["text"]),
                    revision_of=row.get("revision_of"),
                    source_type=SourceType(row.get("source_type", "primary")),
                )
            )
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            _fail(EXIT_BAD_INPUT, f"{path}:{ln}: bad document row: {exc}")
    return docs


def _load_config(config_path: Optional[str]) -> Config:
    if config_path:
        try:
            return Config.from_file(config_path)
        except (OSError, ValueError, TypeError, KeyError) as exc:
            _fail(EXIT_BAD_INPUT, f"cannot load config {config_path}: {exc}")
    return Config()


def _load_schema(schema_path: Optional[str]) -> Optional[Schema]:
    if not schema_path or not Path(schema_path).exists():
        return None
    try:
        return Schema.from_json(Path(schema_path).read_text(encoding="utf-8"))
    except (OSError, ValueError, TypeError, KeyError) as exc:
        _fail(EXIT_BAD_INPUT, f"cannot load schema {schema_path}: {exc}")


def _load_aliases(aliases_path: Optional[str]) -> AliasTable:
    if not aliases_path:
        return EMPTY_ALIASES
    try:
        return AliasTable.from_json(Path(aliases_path).read_text(encoding="utf-8"))
    except (OSError, ValueError, TypeError) as exc:
        _fail(EXIT_BAD_INPUT, f"cannot load aliases {aliases_path}: {exc}")


def _draft_schema_json(docs: list[Document], aliases: AliasTable) -> str:
    entries = discover_schema(docs, RuleExtractor(), aliases)
    return Schema(entries).to_json()


@click.group()
def main() -> None:
    """Governed atomic-fact store: ingest, query, evaluate, serve."""


@main.command()
@click.option("--docs", "docs_path", required=True, help="JSONL file of documents")
@click.option("--schema", "schema_path", default=None, help="Predicate schema JSON")
@click.option("--aliases", "aliases_path", default=None, help="Alias table JSON")
@click.option("--store", "store_dir", default=None, help="Store directory (in-memory if omitted)")
@click.option("--config", "config_path", default=None, help="Config JSON file")
@click.option("--quarantine", "quarantine_path", default=None, help="Quarantine JSONL output")
@click.option("--discover-schema", "discover", is_flag=True, help="Emit a draft schema instead of ingesting")
def ingest(docs_path, schema_path, aliases_path, store_dir, config_path, quarantine_path, discover):
    """Extract, canonicalize, date, and integrate a batch of documents."""
    config = _load_config(config_path)
    docs = _read_docs(docs_path)
    aliases = _load_aliases(aliases_path)

    if discover:
        click.echo(_draft_schema_json(docs, aliases))
        return

    schema = _load_schema(schema_path)
    if schema is None:
        candidates = [c for d in docs for c in extract_document(d, RuleExtractor())]
        if candidates:
            click.echo(
                f"error: no schema at {schema_path!r} but {len(candidates)} "
                "candidate statements were found; draft follows",
                err=True,
            )
            click.echo(_draft_schema_json(docs, aliases))
            sys.exit(EXIT_NO_SCHEMA)
        schema = Schema([])

    engine = NuggetEngine(schema=schema, config=config, directory=store_dir)
    try:
        report = ingest_documents(
            engine, docs, RuleExtractor(), aliases, quarantine_path=quarantine_path
        )
        click.echo(json.dumps(report.counts, sort_keys=True))
    finally:
        engine.close()


@main.command()
@click.option("--text", required=True, help="Query text")
@click.option("--at", "at_str", required=True, help="Point in time, ISO date")
@click.option("--view", default="active", type=click.Choice([v.value for v in View]))
@click.option("--k", default=20, type=int, help="Result depth")
@click.option("--store", "store_dir", required=True, help="Store directory")
@click.option("--config", "config_path", default=None, help="Config JSON file")
def query(text, at_str, view, k, store_dir, config_path):
    """Retrieve facts as of a given date and print the context block."""
    try:
        at = date.fromisoformat(at_str)
    except ValueError:
        _fail(EXIT_BAD_INPUT, f"--at must be an ISO date, got {at_str!r}")
    config = _load_config(config_path)
    engine = NuggetEngine(config=config, directory=store_dir)
    try:
        result = retrieve(engine, Query(text=text, t=at, k=k, view=View(view)))
        payload = {
            "query": {"text": text, "at": at_str, "view": view, "k": k},
            "results": [
                {
                    "nugget_id": e.record.id,
                    "text": e.record.text,
                    "subject": e.record.fact.subject_norm,
                    "predicate": e.record.fact.predicate,
                    "object": e.record.fact.object_norm,
                    "t_start": e.record.validity.t_start.isoformat(),
                    "t_end": (
                        e.record.validity.t_end.isoformat()
                        if e.record.validity.t_end
                        else None
                    ),
                    "status": e.record.epistemic.status.value,
                    "score": e.fused,
                }
                for e in result.entries
            ],
        }
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
        if result.context:
            click.echo("")
            click.echo(result.context)
    finally:
        engine.close()


@main.command("eval")
@click.option("--spec", "spec_path", default=None, help="Corpus spec JSON")
@click.option("--systems", default=None, help="Comma-separated system names")
@click.option("--out", "out_path", default=None, help="Report destination (stdout if omitted)")
def eval_cmd(spec_path, systems, out_path):
    """Generate the synthetic corpus and score retrieval systems on it."""
    from .evalharness import SYSTEM_NAMES, SyntheticCorpusSpec, run_eval

    if spec_path:
        try:
            spec = SyntheticCorpusSpec.from_dict(
                json.loads(Path(spec_path).read_text(encoding="utf-8"))
            )
        except (OSError, ValueError, TypeError, KeyError) as exc:
            _fail(EXIT_BAD_INPUT, f"cannot load spec {spec_path}: {exc}")
    else:
        spec = SyntheticCorpusSpec()
    names = tuple(s.strip() for s in systems.split(",")) if systems else SYSTEM_NAMES
    try:
        report = run_eval(
            spec, names, progress=lambda n: click.echo(f"running {n}", err=True)
        )
    except ValueError as exc:
        _fail(EXIT_BAD_INPUT, str(exc))
    text = json.dumps(report, indent=2, sort_keys=True)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
        click.echo(f"wrote {out_path}", err=True)
    else:
        click.echo(text)


@main.command()
@click.option("--store", "store_dir", required=True, help="Store directory")
@click.option("--host", default=None, help="Bind address")
@click.option("--port", default=None, type=int, help="Bind port")
@click.option("--console-dir", default=None, help="Directory of built console assets")
@click.option("--config", "config_path", default=None, help="Config JSON file")
def serve(store_dir, host, port, console_dir, config_path):
    """Serve the HTTP API (and optionally the review console) for a store."""
    from .server import serve as run_server

    config = _load_config(config_path)
    engine = NuggetEngine(config=config, directory=store_dir)
    run_server(
        engine,
        host=host or config.server.host,
        port=port if port is not None else config.server.port,
        console_dir=console_dir or config.server.console_dir,
    )


@main.command()
@click.option("--store", "store_dir", required=True, help="Store directory")
@click.option("--out", "out_path", default=None, help="Destination (stdout if omitted)")
def export(store_dir, out_path):
    """Dump every record as one JSON object per line."""
    engine = NuggetEngine(directory=store_dir)
    try:
        lines = list(engine.export_jsonl())
    finally:
        engine.close()
    if out_path:
        Path(out_path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        click.echo(f"wrote {len(lines)} records to {out_path}", err=True)
    else:
        for line in lines:
            click.echo(line)


@main.command("discover-schema")
@click.option("--docs", "docs_path", required=True, help="JSONL file of documents")
@click.option("--aliases", "aliases_path", default=None, help="Alias table JSON")
def discover_cmd(docs_path, aliases_path):
    """Propose a draft predicate schema from a sample of documents."""
    docs = _read_docs(docs_path)
    click.echo(_draft_schema_json(docs, _load_aliases(aliases_path)))


if __name__ == "__main__":
    main()
