#!/usr/bin/env python3
"""
Command-line interface for thresholdkit.
"""

import dataclasses
import json
import logging
import sys
from collections.abc import Callable, Sequence
from typing import Any

import click
import structlog

from . import __version__
from .config import Config
from .exceptions import ArgumentError, ThresholdKitError
from .models.catalog_models import CatalogEntry, DepthPolicy, SubsetKey
from .models.estimate_models import Budget, EstimationMethod, MethodConfig, SamplePlan
from .models.index_models import ImpactIndex, ScorerKind
from .models.prefix_models import PrefixStore
from .services.catalog_service import (
    CONFIG_NAMES,
    assign_depths,
    custom_policy,
    mine_subsets,
    named_config,
    read_catalog,
    single_term_catalog,
    write_catalog,
)
from .services.eval_service import (
    BENCH_SOURCES,
    EvaluationService,
    format_bench,
    format_report,
    read_queries,
    run_estimate,
    write_csv,
    write_report_csv,
)
from .services.index_builder import (
    build_index,
    load_precomputed,
    sample_index,
    write_impacts,
)
from .services.prefix_service import build_store, store_size_report
from .services.query_engine import exact_threshold
from .services.sampling import check_sample_rate
from .services.synthetic import generate_corpus, generate_query_log
from .utils.codec import (
    INDEX_VERSION,
    STORE_VERSION,
    read_index,
    read_store,
    write_index,
    write_store,
)

logger = structlog.get_logger(__name__)

EXIT_USAGE = 1
EXIT_DATA = 2

EXISTING_FILE = click.Path(exists=True, dir_okay=False)
OUTPUT_FILE = click.Path(dir_okay=False)
METHOD_NAMES = [method.value for method in EstimationMethod]

VERSION_TEXT = (
    f"{__version__} (index format v{INDEX_VERSION}, store format v{STORE_VERSION})"
)


def configure_logging(level: str) -> None:
    """Route structlog through stdlib logging on standard error."""
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level),
        format="%(message)s",
        force=True,
    )


def _int_list(value: str, name: str) -> list[int]:
    try:
        values = [int(part) for part in value.split(",") if part.strip()]
    except ValueError as e:
        raise click.BadParameter(
            f"expected comma-separated integers: {value!r}", param_hint=name
        ) from e
    if not values or any(item < 1 for item in values):
        raise click.BadParameter(
            f"expected positive integers: {value!r}", param_hint=name
        )
    return values


def _policy(policy_name: str | None, depths: str | None) -> DepthPolicy:
    if depths is not None:
        try:
            return custom_policy(_int_list(depths, "--depths"))
        except ArgumentError as e:
            raise click.BadParameter(str(e), param_hint="--depths") from e
    return named_config(policy_name or "huge")


def _budget(ab: int, lb: int | None, lookup_ratio: float | None) -> Budget:
    try:
        if lookup_ratio is not None:
            return Budget.from_ratio(ab, lookup_ratio)
        return Budget(ab=ab, lb=lb or 0)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--ab/--lb") from e


def _method_config(
    method: str,
    k: int,
    ab: int,
    options: dict[str, Any],
    config: Config,
) -> MethodConfig:
    kind = EstimationMethod(method)
    plan = None
    if kind is EstimationMethod.SAMPLED:
        epsilon = options["epsilon"]
        try:
            plan = SamplePlan.create(
                k,
                options["rate"],
                epsilon if epsilon is not None else config.sample_epsilon,
            )
        except ValueError as e:
            raise click.BadParameter(str(e), param_hint="--rate/--epsilon") from e
    return MethodConfig(
        method=kind,
        budget=_budget(ab, options["lb"], options["lookup_ratio"]),
        backup=not options["no_backup"],
        max_subset_size=options["max_size"],
        sample_plan=plan,
    )


def _load_artifacts(
    method: str, options: dict[str, Any], method_configs: Sequence[MethodConfig]
) -> tuple[ImpactIndex, PrefixStore, ImpactIndex | None, PrefixStore | None]:
    """Index and store, plus the sample pair for the sampled method."""
    if method == EstimationMethod.SAMPLED.value and (
        options["sample_index"] is None or options["sample_store"] is None
    ):
        raise click.UsageError("--method sampled needs --sample-index and --sample-store")

    index = read_index(options["index_path"])
    store = read_store(options["store_path"], index)
    if method != EstimationMethod.SAMPLED.value:
        return index, store, None, None
    sample = read_index(options["sample_index"])
    for method_config in method_configs:
        if method_config.sample_plan is not None:
            check_sample_rate(sample, method_config.sample_plan)
    return index, store, sample, read_store(options["sample_store"], sample)


def estimator_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Flags shared by estimate and evaluate."""
    options = [
        click.option(
            "--index", "index_path", required=True, type=EXISTING_FILE, help="Index file"
        ),
        click.option(
            "--store",
            "store_path",
            required=True,
            type=EXISTING_FILE,
            help="Prefix store file",
        ),
        click.option(
            "--method",
            type=click.Choice(METHOD_NAMES),
            default="lookups",
            help="Estimator",
        ),
        click.option("--lb", type=int, default=None, help="Lookup budget (default 0)"),
        click.option(
            "--lookup-ratio",
            type=click.FloatRange(0, 1),
            default=None,
            help="Lookup budget as a fraction of ab",
        ),
        click.option(
            "--max-size",
            type=click.IntRange(1, 4),
            default=None,
            help="Largest stored subset size to use",
        ),
        click.option("--no-backup", is_flag=True, help="Disable the quantile backup"),
        click.option(
            "--sample-index",
            type=EXISTING_FILE,
            default=None,
            help="Sample index (sampled method)",
        ),
        click.option(
            "--sample-store",
            type=EXISTING_FILE,
            default=None,
            help="Sample store (sampled method)",
        ),
        click.option(
            "--rate",
            type=float,
            default=0.05,
            help="Rate the sample was built with, e.g. 0.02 or 0.05",
        ),
        click.option(
            "--epsilon",
            type=float,
            default=None,
            help="Overestimate tolerance (default: SAMPLE_EPSILON)",
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging")
@click.option(
    "--threads", type=int, default=None, help="Worker threads (default: THREADS)"
)
@click.version_option(
    VERSION_TEXT, prog_name="thresholdkit", message="%(prog)s %(version)s"
)
@click.pass_context
def cli(ctx: click.Context, verbose: bool, threads: int | None) -> None:
    """thresholdkit: top-k threshold estimation toolkit."""
    ctx.ensure_object(dict)

    config = Config.from_env()
    if threads is not None:
        if threads < 1:
            raise click.BadParameter("must be positive", param_hint="--threads")
        config = dataclasses.replace(config, threads=threads)
    try:
        config.validate()
    except ValueError as e:
        raise click.UsageError(f"Invalid configuration: {e}") from e

    configure_logging("DEBUG" if verbose else config.log_level)
    ctx.obj["config"] = config


@cli.command("build-index")
@click.argument("corpus", type=EXISTING_FILE)
@click.option(
    "--output", "-o", required=True, type=OUTPUT_FILE, help="Index file to write"
)
@click.option(
    "--scorer",
    type=click.Choice([ScorerKind.BM25.value, ScorerKind.QLD.value]),
    default=ScorerKind.BM25.value,
    help="Scoring model",
)
@click.option(
    "--bits",
    type=click.IntRange(1, 16),
    default=None,
    help="Quantization bits (default: QUANT_BITS)",
)
@click.option("--k1", type=float, default=None, help="BM25 k1 (default: BM25_K1)")
@click.option("--b", "b", type=float, default=None, help="BM25 b (default: BM25_B)")
@click.option("--mu", type=float, default=None, help="QLD mu (default: QLD_MU)")
@click.pass_context
def build_index_command(
    ctx: click.Context,
    corpus: str,
    output: str,
    scorer: str,
    bits: int | None,
    k1: float | None,
    b: float | None,
    mu: float | None,
) -> None:
    """Build a quantized impact index from a TSV corpus."""
    config: Config = ctx.obj["config"]
    index = build_index(
        corpus,
        ScorerKind(scorer),
        bits if bits is not None else config.quant_bits,
        k1=k1 if k1 is not None else config.bm25_k1,
        b=b if b is not None else config.bm25_b,
        mu=mu if mu is not None else config.qld_mu,
    )
    write_index(index, output)
    click.echo(f"documents: {index.document_count}")
    click.echo(f"terms: {index.term_count}")
    click.echo(f"postings: {index.total_postings}")


@cli.command("load-impacts")
@click.argument("impacts", type=EXISTING_FILE)
@click.option(
    "--output", "-o", required=True, type=OUTPUT_FILE, help="Index file to write"
)
def load_impacts_command(impacts: str, output: str) -> None:
    """Convert a learned impact file into an index."""
    index = load_precomputed(impacts)
    write_index(index, output)
    click.echo(f"documents: {index.document_count}")
    click.echo(f"terms: {index.term_count}")


@cli.command("export-impacts")
@click.argument("index_path", metavar="INDEX", type=EXISTING_FILE)
@click.option(
    "--output", "-o", required=True, type=OUTPUT_FILE, help="Impact file to write"
)
def export_impacts_command(index_path: str, output: str) -> None:
    """Write an index in the impact-exchange text format."""
    write_impacts(read_index(index_path), output)


@cli.command("sample-index")
@click.argument("index_path", metavar="INDEX", type=EXISTING_FILE)
@click.option(
    "--output", "-o", required=True, type=OUTPUT_FILE, help="Sample index to write"
)
@click.option(
    "--rate",
    type=float,
    required=True,
    help="Inclusion probability in (0, 1], e.g. 0.02 or 0.05",
)
@click.option("--seed", type=int, default=None, help="Hash seed (default: DEFAULT_SEED)")
@click.pass_context
def sample_index_command(
    ctx: click.Context, index_path: str, output: str, rate: float, seed: int | None
) -> None:
    """Keep a seeded hash sample of the documents."""
    if not 0 < rate <= 1:
        raise click.BadParameter(f"must lie in (0, 1]: {rate}", param_hint="--rate")
    config: Config = ctx.obj["config"]
    sample = sample_index(
        read_index(index_path), rate, seed if seed is not None else config.seed
    )
    write_index(sample, output)
    click.echo(f"documents: {sample.document_count}")
    click.echo(f"terms: {sample.term_count}")


@cli.command("mine-subsets")
@click.argument("log", type=EXISTING_FILE)
@click.option(
    "--index", "index_path", required=True, type=EXISTING_FILE, help="Index file"
)
@click.option(
    "--output", "-o", required=True, type=OUTPUT_FILE, help="Catalog dump to write"
)
@click.option(
    "--max-size",
    type=click.IntRange(1, 4),
    default=None,
    help="Largest subset size (default: policy's largest)",
)
@click.option(
    "--min-freq",
    default="1",
    help="Minimum log frequency per size, comma-separated; the last value repeats",
)
@click.option(
    "--policy",
    type=click.Choice(CONFIG_NAMES),
    default=None,
    help="Named depth policy (default: huge)",
)
@click.option("--depths", default=None, help="Per-size depths, e.g. 10000,10000,4000,3000")
@click.option(
    "--k-max", type=int, default=None, help="Smallest allowed depth (default: largest k)"
)
@click.pass_context
def mine_subsets_command(
    ctx: click.Context,
    log: str,
    index_path: str,
    output: str,
    max_size: int | None,
    min_freq: str,
    policy: str | None,
    depths: str | None,
    k_max: int | None,
) -> None:
    """Mine a query log into a catalog of subsets with prefix depths."""
    config: Config = ctx.obj["config"]
    depth_policy = _policy(policy, depths)
    floors = _int_list(min_freq, "--min-freq")
    size = max_size or depth_policy.max_size

    index = read_index(index_path)
    stats = mine_subsets(
        log,
        index,
        size,
        {s: floors[min(s, len(floors)) - 1] for s in range(1, size + 1)},
        max_terms=config.max_log_query_terms,
    )
    entries = assign_depths(stats, depth_policy, k_max or max(config.k_values))
    written = write_catalog(entries, index, output)
    click.echo(f"subsets: {len(stats)}")
    click.echo(f"catalog entries: {written}")


@cli.command("build-store")
@click.option(
    "--index", "index_path", required=True, type=EXISTING_FILE, help="Index file"
)
@click.option(
    "--output", "-o", required=True, type=OUTPUT_FILE, help="Store file to write"
)
@click.option("--catalog", type=EXISTING_FILE, default=None, help="Catalog dump")
@click.option("--log", type=EXISTING_FILE, default=None, help="Query log to mine")
@click.option("--all-terms", is_flag=True, help="Full-depth prefix for every term")
@click.option(
    "--policy",
    type=click.Choice(CONFIG_NAMES),
    default=None,
    help="Named depth policy (default: huge)",
)
@click.option("--depths", default=None, help="Per-size depths, e.g. 10000,10000,4000,3000")
@click.option(
    "--quantile-all",
    is_flag=True,
    help="Quantile records for every mined subset up to size 4",
)
@click.option(
    "--k", "k_list", default=None, help="Quantile grid, comma-separated (default: K_VALUES)"
)
@click.pass_context
def build_store_command(
    ctx: click.Context,
    index_path: str,
    output: str,
    catalog: str | None,
    log: str | None,
    all_terms: bool,
    policy: str | None,
    depths: str | None,
    quantile_all: bool,
    k_list: str | None,
) -> None:
    """Build quantile records and prefixes, then print section sizes."""
    config: Config = ctx.obj["config"]
    if sum(bool(source) for source in (catalog, log, all_terms)) != 1:
        raise click.UsageError("give exactly one of --catalog, --log or --all-terms")
    if quantile_all and log is None:
        raise click.UsageError("--quantile-all needs --log")
    k_values = _int_list(k_list, "--k") if k_list else list(config.k_values)
    depth_policy = _policy(policy, depths)

    index = read_index(index_path)
    quantile_subsets: list[SubsetKey] | None = None
    entries: list[CatalogEntry]
    if catalog is not None:
        entries = read_catalog(catalog, index)
    elif log is not None:
        size = 4 if quantile_all else depth_policy.max_size
        stats = mine_subsets(log, index, size, max_terms=config.max_log_query_terms)
        entries = assign_depths(stats, depth_policy, max(k_values))
        if quantile_all:
            quantile_subsets = [item.key for item in stats]
    else:
        entries = single_term_catalog(index)

    store = build_store(
        index,
        entries,
        k_values,
        quantile_subsets,
        policy_name="all-terms" if all_terms else depth_policy.name,
        threads=config.threads,
        show_progress=sys.stderr.isatty(),
    )
    write_store(store, output)
    report = store_size_report(store)
    click.echo(json.dumps(report.model_dump() | {"total": report.total}, indent=2))


@cli.command("store-info")
@click.argument("store_path", metavar="STORE", type=EXISTING_FILE)
@click.option(
    "--index",
    "index_path",
    type=EXISTING_FILE,
    default=None,
    help="Check the store against this index",
)
def store_info_command(store_path: str, index_path: str | None) -> None:
    """Show store metadata and section sizes."""
    index = read_index(index_path) if index_path else None
    store = read_store(store_path, index)
    report = store_size_report(store)
    info = {
        "policy": store.policy_name,
        "k_values": list(store.k_values),
        "subsets": len(store.quantiles),
        "prefixes": len(store.prefixes),
        "fingerprint": f"{store.index_fingerprint:016x}",
        "sizes": report.model_dump() | {"total": report.total},
    }
    click.echo(json.dumps(info, indent=2))


@cli.command("estimate")
@estimator_options
@click.option("--k", type=click.IntRange(min=1), default=10, help="Threshold rank")
@click.option("--ab", type=int, default=1000, help="Access budget in prefix entries")
@click.option("--query", default=None, help="Query text (default: standard input)")
@click.option("--exact", is_flag=True, help="Also print the exact threshold")
@click.option(
    "--output",
    type=click.Choice(["json", "text"]),
    default="text",
    help="Output format",
)
@click.pass_context
def estimate_command(ctx: click.Context, **options: Any) -> None:
    """Estimate the top-k threshold of one query."""
    config: Config = ctx.obj["config"]
    method, k = options["method"], options["k"]
    method_config = _method_config(method, k, options["ab"], options, config)
    text = options["query"] if options["query"] is not None else sys.stdin.read()

    index, store, sample, sample_store = _load_artifacts(method, options, [method_config])
    query = index.resolve_query(text)
    estimate = run_estimate(
        method_config, index, store, query, k, sample_index=sample, sample_store=sample_store
    )
    result: dict[str, Any] = {
        "method": estimate.method.value,
        "k": k,
        "estimate": estimate.value,
        "ab_used": estimate.ab_used,
        "lb_used": estimate.lb_used,
        "backed_by_quantile": estimate.backed_by_quantile,
        "time_ns": estimate.elapsed_ns,
    }
    if options["exact"]:
        result["exact"] = exact_threshold(index, query, k)

    if options["output"] == "json":
        click.echo(json.dumps(result, indent=2))
    else:
        for key, value in result.items():
            click.echo(f"{key}: {value}")


@cli.command("evaluate")
@estimator_options
@click.option(
    "--queries", required=True, type=EXISTING_FILE, help="Query file, one per line"
)
@click.option("--k", "k_list", default="10", help="Threshold ranks, comma-separated")
@click.option("--ab", "ab_list", default="1000", help="Access budgets, comma-separated")
@click.option("--include-single", is_flag=True, help="Keep single-term queries")
@click.option(
    "--csv", "csv_path", type=OUTPUT_FILE, default=None, help="Per-query CSV output"
)
@click.option("--report-csv", type=OUTPUT_FILE, default=None, help="Report CSV output")
@click.pass_context
def evaluate_command(ctx: click.Context, **options: Any) -> None:
    """Compare estimates with exact thresholds over a query file."""
    config: Config = ctx.obj["config"]
    method = options["method"]
    configs = [
        (k, _method_config(method, k, ab, options, config))
        for k in _int_list(options["k_list"], "--k")
        for ab in _int_list(options["ab_list"], "--ab")
    ]

    index, store, sample, sample_store = _load_artifacts(
        method, options, [method_config for _, method_config in configs]
    )
    service = EvaluationService(
        config, index, store, sample_index=sample, sample_store=sample_store
    )
    queries = read_queries(options["queries"], index)

    reports = []
    records = []
    for k, method_config in configs:
        report, run_records = service.evaluate(
            queries, k, method_config, include_single_term=options["include_single"]
        )
        reports.append(report)
        records.extend(run_records)

    if options["csv_path"]:
        write_csv(records, options["csv_path"])
    if options["report_csv"]:
        write_report_csv(reports, options["report_csv"])
    click.echo(format_report(reports))


@cli.command("bench-maxscore")
@click.option(
    "--index", "index_path", required=True, type=EXISTING_FILE, help="Index file"
)
@click.option(
    "--store", "store_path", required=True, type=EXISTING_FILE, help="Prefix store file"
)
@click.option(
    "--queries", required=True, type=EXISTING_FILE, help="Query file, one per line"
)
@click.option("--k", type=click.IntRange(min=1), default=10, help="Threshold rank")
@click.option("--ab", type=int, default=1000, help="Access budget of the lookups source")
@click.option(
    "--lb", type=int, default=None, help="Lookup budget of the lookups source (default: ab)"
)
@click.option(
    "--sources",
    default=",".join(BENCH_SOURCES),
    help="Threshold sources, comma-separated",
)
@click.pass_context
def bench_maxscore_command(
    ctx: click.Context,
    index_path: str,
    store_path: str,
    queries: str,
    k: int,
    ab: int,
    lb: int | None,
    sources: str,
) -> None:
    """Run MaxScore seeded by each threshold source and compare work."""
    config: Config = ctx.obj["config"]
    names = [name.strip() for name in sources.split(",") if name.strip()]
    if not names or set(names) - set(BENCH_SOURCES):
        raise click.BadParameter(
            f"choose from {', '.join(BENCH_SOURCES)}", param_hint="--sources"
        )
    lookups = MethodConfig(
        method=EstimationMethod.LOOKUPS,
        budget=_budget(ab, ab if lb is None else lb, None),
    )

    index = read_index(index_path)
    store = read_store(store_path, index)
    service = EvaluationService(config, index, store)
    rows = service.bench_maxscore(read_queries(queries, index), k, names, lookups)
    click.echo(format_bench(rows))


@cli.command("generate-corpus")
@click.option(
    "--output", "-o", required=True, type=OUTPUT_FILE, help="Corpus TSV to write"
)
@click.option("--log", "log_path", type=OUTPUT_FILE, default=None, help="Query log to write")
@click.option(
    "--documents", type=click.IntRange(min=1), default=10000, help="Document count"
)
@click.option(
    "--vocabulary", type=click.IntRange(min=20), default=5000, help="Vocabulary size"
)
@click.option(
    "--mean-length", type=click.IntRange(min=1), default=60, help="Mean document length"
)
@click.option(
    "--queries", type=click.IntRange(min=0), default=2000, help="Query count for --log"
)
@click.option("--seed", type=int, default=None, help="Generator seed (default: DEFAULT_SEED)")
@click.pass_context
def generate_corpus_command(
    ctx: click.Context,
    output: str,
    log_path: str | None,
    documents: int,
    vocabulary: int,
    mean_length: int,
    queries: int,
    seed: int | None,
) -> None:
    """Write a seeded Zipfian corpus and optionally a query log."""
    config: Config = ctx.obj["config"]
    seed = seed if seed is not None else config.seed
    generate_corpus(output, documents, vocabulary, mean_length=mean_length, seed=seed)
    if log_path:
        generate_query_log(log_path, queries, vocabulary, seed=seed + 1)


@cli.command("config")
@click.pass_context
def config_show(ctx: click.Context) -> None:
    """Show current configuration."""
    config = ctx.obj["config"]

    click.echo("Current Configuration:")
    click.echo("=" * 40)

    for key, value in config.to_dict().items():
        click.echo(f"{key}: {value}")


def run(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and map failures to exit codes.

    0 on success, 1 on usage errors, 2 on data, format and I/O errors.
    """
    try:
        result = cli.main(
            args=list(argv) if argv is not None else None,
            prog_name="thresholdkit",
            standalone_mode=False,
        )
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except (ThresholdKitError, ValueError, OSError) as e:
        logger.debug("Command failed", error=str(e))
        click.echo(f"Error: {e}", err=True)
        return EXIT_DATA
    return result if isinstance(result, int) else 0


def main() -> None:
    """Main CLI entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
