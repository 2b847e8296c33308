"""Pipeline CLI: every stage writes plain files so stages compose.

Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from lkg import __version__
from lkg.config import embedder_from_config, load_config, provider_from_config
from lkg.corpus import (
    RawDocument,
    load_corpus,
    load_docs,
    parse_document,
    save_corpus,
    save_docs,
)
from lkg.errors import LkgError
from lkg.evaluation import (
    EvalResources,
    PredictorKind,
    benchmark,
    build_gold,
    render_report_csv,
    render_report_text,
)
from lkg.extraction import candidate_from_dict, candidate_to_dict
from lkg.graph import export_jsonld, load_snapshot, save_snapshot, snapshot_fingerprint
from lkg.index import BuildParams, build_index, load_index, save_index
from lkg.normalize import load_alias_tables, parse_provision_ref, resolve, StatuteCatalog
from lkg.ontology import NodeLabel
from lkg.pipeline import DocumentExtraction, build_graph, extract_corpus
from lkg.search import SearchQuery, explain, retrieve_provisions
from lkg.synth import SynthParams, synth_corpus

log = logging.getLogger(__name__)

NODES_FORMAT = "lkg-nodes/1"


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _write_json(path: str, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


@click.group()
@click.version_option(version=__version__, prog_name="lkg")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON config file; LKG_* environment variables override it.")
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, verbose: bool) -> None:
    """Legal knowledge graph pipeline."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING)
    try:
        ctx.obj = load_config(config_path)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _fail(f"cannot load config: {exc}")


@main.command()
@click.option("--seed", type=int, required=True, help="Generator seed.")
@click.option("--docs", "n_docs", type=int, required=True, help="Number of documents.")
@click.option("--out", "out_path", required=True, help="Corpus file to write.")
@click.option("--catalog-size", type=int, default=SynthParams().catalog_size,
              show_default=True, help="Fictional statute catalog size.")
def synth(seed: int, n_docs: int, out_path: str, catalog_size: int) -> None:
    """Generate a seeded synthetic corpus with gold annotations."""
    try:
        docs = synth_corpus(seed, n_docs, SynthParams(catalog_size=catalog_size))
        save_corpus(docs, out_path)
    except LkgError as exc:
        _fail(str(exc))
    click.echo(f"wrote {len(docs)} documents to {out_path}")


@main.command()
@click.option("--corpus", "corpus_path", required=True,
              help="Corpus JSON file, or a directory of markup (.html/.txt) files.")
@click.option("--out", "out_path", required=True, help="Parsed-documents file to write.")
def ingest(corpus_path: str, out_path: str) -> None:
    """Parse raw documents into the segmented document snapshot."""
    source = Path(corpus_path)
    try:
        if source.is_dir():
            docs = []
            for file in sorted(source.iterdir()):
                if file.suffix.lower() not in (".html", ".htm", ".txt"):
                    continue
                raw = RawDocument.from_bytes(file.stem, "markup", file.read_bytes())
                docs.append(parse_document(raw))
        else:
            docs = load_corpus(source)
        save_docs(docs, out_path)
    except LkgError as exc:
        _fail(str(exc))
    click.echo(f"ingested {len(docs)} documents into {out_path}")


@main.command()
@click.option("--docs", "docs_path", required=True, help="Parsed-documents file.")
@click.option("--mode", type=click.Choice(["oracle", "mock", "remote"]), default="oracle",
              show_default=True, help="Extraction provider mode.")
@click.option("--out", "out_path", required=True, help="Candidates file to write.")
@click.pass_obj
def extract(cfg, docs_path: str, mode: str, out_path: str) -> None:
    """Extract node candidates per section."""
    try:
        docs = load_docs(docs_path)
        provider = provider_from_config(cfg, mode)
        extractions = extract_corpus(docs, provider)
    except LkgError as exc:
        _fail(str(exc))
    payload = {
        "version": NODES_FORMAT,
        "mode": mode,
        "documents": {
            doc_id: {
                "candidates": [candidate_to_dict(c) for c in ex.candidates],
                "warnings": ex.warnings,
                "failed_sections": ex.failed_sections,
            }
            for doc_id, ex in extractions.items()
        },
    }
    _write_json(out_path, payload)
    total = sum(len(ex.candidates) for ex in extractions.values())
    click.echo(f"extracted {total} candidates into {out_path}")


@main.command()
@click.option("--text", required=True, help="Reference text to normalize.")
@click.option("--aliases", "aliases_path", default=None, help="Alias-table JSON file.")
@click.option("--doc-id", default=None, help="Document id selecting the alias table.")
@click.option("--statutes", "statutes_path", default=None, help="Statute catalog JSON file.")
def normalize(text: str, aliases_path: str | None, doc_id: str | None, statutes_path: str | None) -> None:
    """Parse a citation and print canonical provision strings."""
    try:
        aliases = None
        if aliases_path:
            tables = load_alias_tables(aliases_path)
            if doc_id is None and len(tables) == 1:
                doc_id = next(iter(tables))
            aliases = tables.get(doc_id) if doc_id else None
        catalog = StatuteCatalog.load(statutes_path) if statutes_path else None
        refs = parse_provision_ref(text)
        result = resolve(refs, aliases=aliases, catalog=catalog)
    except LkgError as exc:
        _fail(str(exc))
    for provision in result.resolved:
        click.echo(provision.canonical())
    for ref in result.unresolved:
        click.echo(f"(unresolved) {ref.source_text}")
    if not refs:
        click.echo("(no reference found)")


@main.command()
@click.option("--docs", "docs_path", required=True, help="Parsed-documents file.")
@click.option("--nodes", "nodes_path", required=True, help="Candidates file from extract.")
@click.option("--mode", type=click.Choice(["oracle", "mock", "remote"]), default="oracle",
              show_default=True, help="Linking provider mode.")
@click.option("--aliases", "aliases_path", default=None, help="Alias-table JSON file.")
@click.option("--statutes", "statutes_path", default=None, help="Statute catalog JSON file.")
@click.option("--out", "out_path", required=True, help="Graph snapshot to write.")
@click.pass_obj
def link(cfg, docs_path: str, nodes_path: str, mode: str, aliases_path: str | None,
         statutes_path: str | None, out_path: str) -> None:
    """Resolve citations, place nodes, and construct edges into a snapshot."""
    try:
        docs = load_docs(docs_path)
        payload = json.loads(Path(nodes_path).read_text(encoding="utf-8"))
        if payload.get("version") != NODES_FORMAT:
            _fail(f"nodes file must declare version {NODES_FORMAT!r}")
        extractions = {}
        for doc_id, entry in payload["documents"].items():
            extractions[doc_id] = DocumentExtraction(
                doc_id=doc_id,
                candidates=[candidate_from_dict(c) for c in entry["candidates"]],
                warnings=list(entry.get("warnings", [])),
                failed_sections=list(entry.get("failed_sections", [])),
            )
        provider = provider_from_config(cfg, mode)
        aliases = load_alias_tables(aliases_path) if aliases_path else None
        catalog = StatuteCatalog.load(statutes_path) if statutes_path else None
        result = build_graph(
            docs,
            provider,
            aliases=aliases,
            catalog=catalog,
            extractions=extractions,
        )
        save_snapshot(result.graph, out_path)
    except LkgError as exc:
        _fail(str(exc))
    for warning in result.warnings:
        log.warning("%s", warning)
    click.echo(
        f"graph: {len(result.graph.nodes)} nodes, {len(result.graph.edges)} edges -> {out_path}"
    )


@main.command()
@click.option("--graph", "graph_path", required=True, help="Graph snapshot file.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of text blocks.")
def stats(graph_path: str, as_json: bool) -> None:
    """Print node/edge/network statistics for a snapshot."""
    try:
        graph = load_snapshot(graph_path)
    except LkgError as exc:
        _fail(str(exc))
    report = graph.stats()
    if as_json:
        click.echo(json.dumps(report.as_dict(), indent=2))
        return
    click.echo("Nodes (label: count, avg in, avg out, self-loops)")
    for label, row in report.nodes.items():
        click.echo(
            f"  {label:<17} {row.count:>7}  {row.avg_in_degree:>7.2f}  "
            f"{row.avg_out_degree:>7.2f}  {row.self_loops:>6}"
        )
    click.echo("Edges (kind: count, avg multiplicity)")
    for kind, row in report.edges.items():
        click.echo(f"  {kind:<17} {row.count:>7}  {row.multiplicity:>7.2f}")
    net = report.network
    click.echo("Network")
    click.echo(f"  nodes: {net.node_count}   edges: {net.edge_count}")
    click.echo(f"  WCCs with diameter >= 2: {net.wcc_diameter_ge2}")
    click.echo(f"  avg/std WCC diameter: {net.avg_wcc_diameter:.2f} / {net.std_wcc_diameter:.2f}")
    click.echo(f"  degree std: {net.degree_std:.2f}   density: {net.density:.3e}")


@main.group(name="index")
def index_group() -> None:
    """Vector-index operations."""


@index_group.command(name="build")
@click.option("--graph", "graph_path", required=True, help="Graph snapshot file.")
@click.option("--mode", type=click.Choice(["exact", "approximate"]), default="exact",
              show_default=True, help="Index query mode.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for approximate-mode construction.")
@click.option("--out", "out_path", required=True, help="Index file to write.")
@click.pass_obj
def index_build(cfg, graph_path: str, mode: str, seed: int, out_path: str) -> None:
    """Embed every Fact node and persist the index."""
    try:
        graph = load_snapshot(graph_path)
        facts = [
            (node.node_id, node.text)
            for node in sorted(graph.nodes_with_label(NodeLabel.FACT), key=lambda n: n.node_id)
        ]
        if not facts:
            _fail("graph holds no Fact nodes to index")
        embedder = embedder_from_config(cfg)
        index = build_index(facts, embedder, mode=mode, build_params=BuildParams(seed=seed))
        save_index(index, out_path)
    except LkgError as exc:
        _fail(str(exc))
    click.echo(f"indexed {len(facts)} facts ({mode}) -> {out_path}")


@main.command()
@click.option("--graph", "graph_path", required=True, help="Graph snapshot file.")
@click.option("--index", "index_path", required=True, help="Index file.")
@click.option("--text", default=None, help="Free-text query fact.")
@click.option("--fact-id", default=None, help="In-graph fact node id.")
@click.option("--k", type=int, default=3, show_default=True, help="Neighbor count.")
@click.option("--no-mask", is_flag=True, help="Disable fact masking for in-graph queries.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON hits.")
@click.pass_obj
def search(cfg, graph_path: str, index_path: str, text: str | None, fact_id: str | None,
           k: int, no_mask: bool, as_json: bool) -> None:
    """Retrieve provisions for a query fact."""
    if (text is None) == (fact_id is None):
        raise click.UsageError("provide exactly one of --text / --fact-id")
    try:
        graph = load_snapshot(graph_path).freeze()
        embedder = embedder_from_config(cfg)
        index = load_index(index_path, embedder)
        query = SearchQuery(text=text, node_id=fact_id, k=k, mask=not no_mask)
        hits = retrieve_provisions(query, graph, index, embedder)
    except LkgError as exc:
        _fail(str(exc))
    if as_json:
        payload = [
            {
                "provision": hit.provision.canonical(),
                "score": hit.score,
                "supporting_facts": sorted({p.neighbor_fact for p in hit.supporting_paths}),
            }
            for hit in hits
        ]
        click.echo(json.dumps(payload, indent=2))
        return
    if not hits:
        click.echo("no provisions found")
    for hit in hits:
        click.echo(explain(hit, graph))


@main.command(name="eval")
@click.option("--graph", "graph_path", required=True, help="Graph snapshot file.")
@click.option("--index", "index_path", required=True, help="Index file.")
@click.option("--docs", "docs_path", default=None,
              help="Parsed-documents file (needed by llm-context / llm-rag).")
@click.option("--predictors", required=True,
              help="Comma-separated predictor specs, e.g. lkg:k=3,llm-simple,llm-rag:m=3.")
@click.option("--report", "report_prefix", required=True,
              help="Report path prefix; writes <prefix>.txt, <prefix>.csv, <prefix>.manifest.json.")
@click.pass_obj
def eval_command(cfg, graph_path: str, index_path: str, docs_path: str | None,
                 predictors: str, report_prefix: str) -> None:
    """Benchmark predictors against graph-derived gold labels.

    LLM predictors need a remote provider (config llm_endpoint or
    LKG_LLM_ENDPOINT); LKG retrieval runs fully offline.
    """
    try:
        specs = [PredictorKind.parse(s) for s in predictors.split(",") if s.strip()]
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    try:
        graph = load_snapshot(graph_path).freeze()
        embedder = embedder_from_config(cfg)
        index = load_index(index_path, embedder)
        docs = {d.doc_id: d for d in load_docs(docs_path)} if docs_path else None
        provider = None
        if any(s.kind.startswith("llm") for s in specs):
            try:
                provider = provider_from_config(cfg, "remote")
            except ValueError as exc:
                _fail(f"LLM predictors need a provider: {exc}")
        gold = build_gold(graph)
        resources = EvalResources(
            graph=graph, index=index, embedder=embedder, provider=provider, docs=docs
        )
        report = benchmark(gold, specs, resources)
    except LkgError as exc:
        _fail(str(exc))
    text = render_report_text(report)
    Path(f"{report_prefix}.txt").write_text(text, encoding="utf-8")
    Path(f"{report_prefix}.csv").write_text(render_report_csv(report), encoding="utf-8")
    _write_json(
        f"{report_prefix}.manifest.json",
        {
            "predictors": [s.label() for s in specs],
            "gold_total": report.gold_total,
            "graph_fingerprint": snapshot_fingerprint(graph),
            "embedder_fingerprint": embedder.fingerprint(),
            "index_mode": index.mode,
            "index_build_params": index.build_params.as_dict(),
            "provider": None
            if provider is None
            else {"mode": provider.mode, "endpoint": provider.endpoint,
                  "model_name": provider.model_name},
        },
    )
    click.echo(text)


@main.command()
@click.option("--graph", "graph_path", required=True, help="Graph snapshot file.")
@click.option("--jsonld", "jsonld_path", required=True, help="JSON-LD file to write.")
def export(graph_path: str, jsonld_path: str) -> None:
    """Export the graph as a JSON-LD document."""
    try:
        graph = load_snapshot(graph_path)
        _write_json(jsonld_path, export_jsonld(graph))
    except LkgError as exc:
        _fail(str(exc))
    click.echo(f"exported {len(graph.nodes)} nodes to {jsonld_path}")


@main.command()
@click.option("--graph", "graph_path", default=None, help="Graph snapshot file.")
@click.option("--index", "index_path", default=None, help="Index file.")
@click.option("--addr", default=None, help="host:port to bind (default from config).")
@click.pass_obj
def serve(cfg, graph_path: str | None, index_path: str | None, addr: str | None) -> None:
    """Serve the read-only HTTP API over a snapshot."""
    import uvicorn

    from lkg.service import create_app, load_state

    graph_path = graph_path or cfg.snapshot_path
    index_path = index_path or cfg.index_path
    if not graph_path or not index_path:
        raise click.UsageError("--graph/--index (or config snapshot_path/index_path) required")
    try:
        state = load_state(graph_path, index_path, embedder_from_config(cfg))
    except LkgError as exc:
        _fail(str(exc))
    app = create_app(state, cors_origins=cfg.cors_origin_list())
    host, _, port = (addr or cfg.service_addr).partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8321))


if __name__ == "__main__":
    main()
