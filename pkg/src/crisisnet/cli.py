"""Command-line pipeline: ingest -> text -> sentiment/terms/bigrams -> graph -> topics."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from crisisnet import ingest, netgraph, ngrams, sentiment, textprep, topics
from crisisnet.errors import ConfigError, CrisisNetError

log = logging.getLogger("crisisnet")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2

MANIFEST = "manifest.json"
REPORT = "report.md"

OUTPUTS = {
    "ingest": ["corpus.jsonl", "stats.txt"],
    "sentiment": ["sentiment.csv"],
    "heatmap": ["top_terms.csv", "heatmap.csv"],
    "bigrams": ["bigrams.csv", "bigrams.gexf"],
    "graph": ["mention_edges.csv", "mention_graph.gexf", "metrics.csv"],
    "topics": ["topics.csv", "coherence.csv"],
}
STAGE_ORDER = ["ingest", "sentiment", "heatmap", "bigrams", "graph", "topics"]
REPORT_INPUTS = [
    "stats.txt", "sentiment.csv", "top_terms.csv", "metrics.csv", "mention_graph.gexf", "topics.csv",
]


# --- configuration -------------------------------------------------------------


@dataclass
class InputSection:
    paths: list[str] = field(default_factory=list)
    keywords: list[str] = field(default_factory=lambda: sorted(ingest.DEFAULT_KEYWORDS))
    stoplist: str | None = None
    lexicon: str | None = None
    regions: str | None = None
    agency_types: str | None = None
    utc_offset_hours: float = 0.0


@dataclass
class TermsSection:
    top_k: int = 100


@dataclass
class BigramsSection:
    top_k: int = 20


@dataclass
class TopicsSection:
    k_values: list[int] = field(default_factory=lambda: [2, 3, 4, 5])
    alpha: float | None = None
    beta: float = 0.01
    sweeps: int = 500
    top_words: int = 5
    coherence_words: int = 10
    min_documents: int = 5


@dataclass
class GraphSection:
    method: str = "modularity"
    resolution: float = 1.0
    attenuation: float | None = None
    top_nodes: int = 5
    scope: str = "largest_component"


@dataclass
class PipelineConfig:
    input: InputSection = field(default_factory=InputSection)
    terms: TermsSection = field(default_factory=TermsSection)
    bigrams: BigramsSection = field(default_factory=BigramsSection)
    topics: TopicsSection = field(default_factory=TopicsSection)
    graph: GraphSection = field(default_factory=GraphSection)
    seed: int = 0
    out: str = "out"

    def validate(self, need_lexicon: bool = True) -> None:
        """Raise :class:`ConfigError` naming the first offending field."""
        inp = self.input
        if not inp.paths:
            raise ConfigError("input.paths: at least one archive is required")
        for i, p in enumerate(inp.paths):
            if not Path(p).is_file():
                raise ConfigError(f"input.paths[{i}]: file not found: {p}")
        if not inp.keywords:
            raise ConfigError("input.keywords: keyword list is empty")
        if need_lexicon and not inp.lexicon:
            raise ConfigError("input.lexicon: a lexicon file is required")
        for name in ("stoplist", "lexicon", "regions", "agency_types"):
            p = getattr(inp, name)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"input.{name}: file not found: {p}")
        checks = [
            ("terms.top_k", self.terms.top_k >= 1),
            ("bigrams.top_k", self.bigrams.top_k >= 1),
            ("topics.k_values", bool(self.topics.k_values) and min(self.topics.k_values) >= 1),
            ("topics.alpha", self.topics.alpha is None or self.topics.alpha > 0),
            ("topics.beta", self.topics.beta > 0),
            ("topics.sweeps", self.topics.sweeps >= 1),
            ("topics.top_words", self.topics.top_words >= 1),
            ("topics.coherence_words", self.topics.coherence_words >= 2),
            ("topics.min_documents", self.topics.min_documents >= 1),
            ("graph.method", self.graph.method in ("modularity", "pathweight")),
            ("graph.resolution", self.graph.resolution > 0),
            ("graph.attenuation", self.graph.attenuation is None or self.graph.attenuation > 0),
            ("graph.top_nodes", self.graph.top_nodes >= 1),
            ("graph.scope", self.graph.scope in ("largest_component", "full")),
        ]
        for name, ok in checks:
            if not ok:
                raise ConfigError(f"{name}: invalid value")


def _build_section(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix}: expected a table")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{prefix}.{unknown[0]}: unknown setting")
    return cls(**data)


def config_from_dict(data: dict, base_dir: Path | None = None) -> PipelineConfig:
    data = dict(data)
    sections = {
        "input": InputSection, "terms": TermsSection, "bigrams": BigramsSection,
        "topics": TopicsSection, "graph": GraphSection,
    }
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in sections:
            kwargs[key] = _build_section(sections[key], value, key)
        elif key in ("seed", "out"):
            kwargs[key] = value
        else:
            raise ConfigError(f"{key}: unknown setting")
    cfg = PipelineConfig(**kwargs)
    if base_dir is not None:
        _resolve_paths(cfg, base_dir)
    return cfg


def _resolve_paths(cfg: PipelineConfig, base: Path) -> None:
    def fix(p):
        return p if p is None or Path(p).is_absolute() else str(base / p)

    cfg.input.paths = [fix(p) for p in cfg.input.paths]
    for name in ("stoplist", "lexicon", "regions", "agency_types"):
        setattr(cfg.input, name, fix(getattr(cfg.input, name)))
    cfg.out = fix(cfg.out)


def _parse_value(raw: str):
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_overrides(data: dict, overrides: list[tuple[str, str]]) -> dict:
    """Set dotted keys (``topics.sweeps``) from CLI strings, parsed as TOML values."""
    data = json.loads(json.dumps(data))
    for key, raw in overrides:
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{key}: cannot override a non-table value")
        node[parts[-1]] = _parse_value(raw)
    return data


def load_config(path: str | Path | None, overrides: list[tuple[str, str]] = ()) -> PipelineConfig:
    data: dict = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"--config: file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"--config: {exc}") from exc
        base = path.parent
    data = apply_overrides(data, list(overrides))
    return config_from_dict(data, base)


# --- pipeline ----------------------------------------------------------------------


class StageError(CrisisNetError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Pipeline:
    """Lazily computed intermediate results shared between stages."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.out)
        self.written: list[str] = []
        self._cache: dict[str, Any] = {}

    def _once(self, key: str, fn: Callable[[], Any]):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    # shared inputs

    @property
    def corpus(self) -> tuple[list[ingest.Tweet], ingest.CorpusStats]:
        inp = self.config.input
        return self._once("corpus", lambda: ingest.load_corpus(inp.paths, inp.keywords))

    @property
    def tweets(self) -> list[ingest.Tweet]:
        return self.corpus[0]

    @property
    def stoplist(self) -> frozenset[str]:
        p = self.config.input.stoplist
        return self._once(
            "stoplist", lambda: textprep.load_stoplist(p) if p else textprep.DEFAULT_STOPWORDS
        )

    @property
    def documents(self) -> list[textprep.Document]:
        return self._once(
            "docs",
            lambda: textprep.documents_from_tweets(
                self.tweets, self.stoplist, self.config.input.utc_offset_hours
            ),
        )

    @property
    def graph(self) -> netgraph.MentionGraph:
        def build():
            p = self.config.input.agency_types
            agencies = netgraph.load_agency_types(p) if p else None
            return netgraph.build_mention_graph(self.tweets, agencies)

        return self._once("graph", build)

    @property
    def partitions(self) -> tuple[netgraph.Partition, netgraph.Partition | None, netgraph.MentionGraph]:
        """(components of the full graph, communities, graph the communities live in)."""

        def compute():
            g = self.graph
            comps = netgraph.summarize(g, netgraph.weak_components(g))
            gc = self.config.graph
            scope = g if gc.scope == "full" else netgraph.induced_subgraph(g, netgraph.largest_component(g))
            if scope.number_of_nodes() == 0:
                return comps, None, scope
            comms = netgraph.detect_communities(
                scope, gc.method, gc.resolution, self.config.seed, gc.attenuation
            )
            return comps, netgraph.summarize(scope, comms), scope

        return self._once("partitions", compute)

    def path(self, name: str) -> Path:
        self.written.append(name)
        return self.out / name

    # stages

    def stage_ingest(self):
        tweets, stats = self.corpus
        regions = ingest.load_regions(self.config.input.regions) if self.config.input.regions else []
        ingest.write_corpus(tweets, self.path("corpus.jsonl"), regions)
        self.path("stats.txt").write_text(stats.to_text(), encoding="utf-8")

    def stage_sentiment(self):
        lex = sentiment.load_lexicon(self.config.input.lexicon)
        series = sentiment.sentiment_timeseries(self.documents, lex)
        sentiment.write_timeseries_csv(series, self.path("sentiment.csv"))

    def stage_heatmap(self):
        docs = self.documents
        ranked = ngrams.top_terms(docs, self.config.terms.top_k)
        with open(self.path("top_terms.csv"), "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rank", "term", "count", "cumulative_fraction"])
            for i, (term, n, cum) in enumerate(ranked, 1):
                w.writerow([i, term, n, f"{cum:.6f}"])
        # heatmap rows in alphabetical order, as displayed in the figures
        terms = sorted(t for t, _, _ in ranked)
        target = self.path("heatmap.csv")
        if terms:
            ngrams.term_time_matrix(docs, terms).to_csv(target)
        else:
            target.write_text("term\n", encoding="utf-8")

    def stage_bigrams(self):
        model = ngrams.fit_bigrams(self.documents)
        bg = ngrams.bigram_graph(model, self.config.bigrams.top_k)
        ngrams.write_edge_csv(bg.edges, self.path("bigrams.csv"))
        netgraph.write_gexf(bg.to_networkx(), [], self.path("bigrams.gexf"))

    def stage_graph(self):
        g = self.graph
        comps, comms, scope = self.partitions
        netgraph.write_edge_csv(g, self.path("mention_edges.csv"))
        parts = [comps] + ([comms] if comms is not None else [])
        netgraph.write_gexf(g, parts, self.path("mention_graph.gexf"))
        rows = list(comps.summaries)
        if comms is not None:
            rows += comms.summaries
        netgraph.write_metrics_csv(rows, self.path("metrics.csv"))

    def stage_topics(self):
        tc = self.config.topics
        _, comms, _ = self.partitions
        docs_by_author: dict[str, list[textprep.Document]] = {}
        for t, d in zip(self.tweets, self.documents):
            if d.tokens:
                docs_by_author.setdefault(t.author_handle, []).append(d)
        template = topics.LdaConfig(
            n_topics=1, alpha=tc.alpha, beta=tc.beta, sweeps=tc.sweeps, seed=self.config.seed
        )
        report_rows = []
        coherence: dict[str, dict[int, float]] = {}
        groups = comms.groups if comms is not None else []
        for label, members in enumerate(groups):
            docs = [d for m in members for d in docs_by_author.get(m, [])]
            if len(docs) < tc.min_documents:
                log.info("community %d: %d documents, topic model skipped", label, len(docs))
                continue
            best_k, scores = topics.select_topic_count(
                docs, tc.k_values, template, tc.coherence_words
            )
            coherence[str(label)] = scores
            _, post = topics.fit_lda(docs, topics.topic_config(template, best_k))
            for t in range(best_k):
                for rank, (word, p) in enumerate(topics.top_words(post.phi, post.vocab, t, tc.top_words), 1):
                    report_rows.append((str(label), t, rank, word, p))
        topics.write_topic_report(report_rows, self.path("topics.csv"))
        topics.write_coherence_report(coherence, self.path("coherence.csv"))

    def write_manifest(self) -> Path:
        entries = [
            {"path": name, "sha256": file_digest(self.out / name)} for name in sorted(set(self.written))
        ]
        manifest = {
            "files": entries,
            "parameters": {"seed": self.config.seed, "top_nodes": self.config.graph.top_nodes},
        }
        target = self.out / MANIFEST
        target.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return target

    def cleanup(self) -> None:
        for name in set(self.written) | {MANIFEST, REPORT}:
            (self.out / name).unlink(missing_ok=True)


def execute(config: PipelineConfig, stages: list[str], with_report: bool = False) -> Path:
    """Run ``stages`` in pipeline order, write the manifest, optionally the report.

    On failure every file written by this call is removed and a
    :class:`StageError` tagged with the failing stage is raised.
    """
    config.validate(need_lexicon="sentiment" in stages)
    pipe = Pipeline(config)
    pipe.out.mkdir(parents=True, exist_ok=True)
    current = "setup"
    try:
        for stage in STAGE_ORDER:
            if stage in stages:
                current = stage
                log.info("stage %s", stage)
                getattr(pipe, f"stage_{stage}")()
        current = "manifest"
        manifest = pipe.write_manifest()
        if with_report:
            current = "report"
            report(manifest)
    except Exception as exc:
        pipe.cleanup()
        raise StageError(current, exc) from exc
    return manifest


def run(config: PipelineConfig) -> Path:
    """Full pipeline; returns the path of the manifest."""
    return execute(config, STAGE_ORDER, with_report=True)


# --- report --------------------------------------------------------------------------


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return (rows[0], rows[1:]) if rows else ([], [])


def _md_table(header: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return lines


def report(manifest_path: str | Path) -> Path:
    """Render ``report.md`` next to the manifest, using only the files it lists."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    listed = {e["path"] for e in manifest.get("files", [])}
    gaps = [name for name in REPORT_INPUTS if name not in listed or not (base / name).is_file()]
    if gaps:
        raise ConfigError(f"manifest is missing report inputs: {', '.join(gaps)}")
    top_k = int(manifest.get("parameters", {}).get("top_nodes", 5))

    out = ["# Crisis communication report", ""]

    stats = ingest.CorpusStats.from_text((base / "stats.txt").read_text(encoding="utf-8"))
    out += ["## Corpus", ""]
    out += _md_table(["statistic", "value"], [[k, str(v)] for k, v in asdict(stats).items()] + [["kept", str(stats.kept)]])
    out.append("")

    header, rows = _read_csv(base / "sentiment.csv")
    out += ["## Daily sentiment", ""] + _md_table(header, rows) + [""]

    header, rows = _read_csv(base / "top_terms.csv")
    coverage = rows[-1][3] if rows else "0"
    out += ["## Top terms", "", f"Top {len(rows)} terms cover {float(coverage):.2%} of all tokens.", ""]
    out += _md_table(header, rows) + [""]

    header, rows = _read_csv(base / "metrics.csv")
    out += ["## Components and communities", ""] + _md_table(header, rows) + [""]

    nodes = netgraph.read_gexf_nodes(base / "mention_graph.gexf")
    by_comm: dict[int, list[tuple[str, int]]] = {}
    for handle, attrs in nodes.items():
        c = int(attrs.get("community", -1))
        if c >= 0:
            by_comm.setdefault(c, []).append((handle, int(attrs["degree"])))
    out += [f"## Top {top_k} nodes per community", ""]
    node_rows = []
    for c in sorted(by_comm):
        ranked = sorted(by_comm[c], key=lambda x: (-x[1], x[0]))[:top_k]
        node_rows += [[str(c), str(i), h, str(d)] for i, (h, d) in enumerate(ranked, 1)]
    out += _md_table(["community", "rank", "handle", "degree"], node_rows) + [""]

    header, rows = _read_csv(base / "topics.csv")
    out += ["## Topics per community", ""] + _md_table(header, rows) + [""]

    target = base / REPORT
    target.write_text("\n".join(out), encoding="utf-8")
    return target


# --- entry point ------------------------------------------------------------------------


def _split_overrides(extra: list[str]) -> list[tuple[str, str]]:
    pairs = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) <= 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"--{key}: missing value")
            val = extra[i + 1]
            i += 2
        pairs.append((key, val))
    return pairs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crisisnet",
        description="Crisis-communication analytics over archived tweets.",
        epilog="Any config value can be overridden with a dotted flag, e.g. --topics.sweeps 200.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGE_ORDER + ["run"]:
        p = sub.add_parser(name, help=f"{name} stage" if name != "run" else "full pipeline")
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    p = sub.add_parser("report", help="render report.md from a finished run")
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--out", help="output directory holding manifest.json")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        overrides = _split_overrides(extra)
        if args.seed is not None:
            overrides.append(("seed", str(args.seed)))
        if args.out is not None:
            overrides.append(("out", json.dumps(str(Path(args.out).resolve()))))
        config = load_config(args.config, overrides)
        if args.command == "report":
            print(report(Path(config.out) / MANIFEST))
            return EXIT_OK
        if args.command == "run":
            manifest = run(config)
        else:
            # upstream stages are computed in memory; only this stage's files are written
            manifest = execute(config, [args.command])
        print(manifest)
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageError as exc:
        code = EXIT_VALIDATION if isinstance(exc.cause, ConfigError) else EXIT_RUNTIME
        print(f"error: {exc}", file=sys.stderr)
        return code
    except (CrisisNetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
