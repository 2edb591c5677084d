"""Command-line pipeline: build benchmarks, score embeddings, emit reports.

A run is described by one INI-style config file; command-line flags override
the seed and the output directory. All randomness flows from the single seed
in the config, so rerunning a command with the same config reproduces every
output byte for byte. Every emitted file starts with metadata comments
(tool version, config hash, seed) that tie it back to its run.

Exit codes: 0 success, 1 completed with warnings, 2 input error, 3 internal.
"""

import argparse
import configparser
import hashlib
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .datasetgen import (
    FAMILIES,
    LEVENSHTEIN,
    RANDOM,
    SPLITS,
    STRATEGIES,
    SimilarityDataset,
    SplitSpec,
    assemble_dataset,
    dataset_stats,
    export_tsv,
    import_tsv,
)
from .categorysep import (
    CategoryPartition,
    avg_category_similarity,
    load_category_terms,
    overlap_error,
)
from .embeddings import (
    coverage_report,
    covered_subset,
    load_term_vectors,
    load_word_vectors_text,
    vocab_overlap,
)
from .errors import ConfigError, EvaluationError, OntosimError, UndefinedScoreError
from .evaluation import (
    CLASSIFICATION,
    CORRELATION,
    BootstrapConfig,
    GradedDataset,
    classification_result,
    read_graded_csv,
    significance_matrix,
    spearman_correlation,
)
from .ontology import (
    POSSIBLY_EQUIVALENT_TO,
    REPLACED_BY,
    SAME_AS,
    IdMap,
    exclude_module,
    parse_release,
)
from .simmetrics import METRIC_NAMES, MetricSpec, score_dataset

logger = logging.getLogger(__name__)

WORD = "word"
TERM = "term"

EVAL_HEADER = (
    "dataset", "embedding", "metric", "n_total", "n_covered", "coverage",
    "spearman", "accuracy", "auc", "threshold",
)
COMPARE_HEADER = (
    "dataset", "metric", "embedding", "better", "worse",
    "comparisons", "alpha_per_test", "verdicts",
)
STATS_HEADER = (
    "family", "split", "size", "avg_lev_pos",
    "avg_lev_neg_random", "avg_lev_neg_levenshtein",
)
CATEGORY_HEADER = (
    "embedding", "metric", "n_dp", "n_tp", "n_org", "raw_count", "relative",
    "dp_tp", "dp_org", "dp_dp", "tp_tp", "org_org",
)
COVERAGE_HEADER = ("dataset", "embedding", "n_pairs", "coverage")

_CATEGORY_KEYS = ("diagnostic_procedures", "therapeutic_procedures", "organisms")

_ALLOWED_KEYS = {
    "ontology": {
        "concepts", "descriptions", "associations", "fsn_types", "synonym_types",
        "possibly_equivalent_to", "replaced_by", "same_as", "exclude_modules",
    },
    "build": {"families", "splits", "strategies", "seed", "threshold"},
    "embeddings": None,  # free-form: name = kind:path
    "eval": {"metrics", "alpha", "resamples", "datasets"},
    "category": set(_CATEGORY_KEYS),
    "output": {"dir"},
}


@dataclass(frozen=True)
class EmbeddingSource:
    name: str
    kind: str  # WORD | TERM
    path: Path


@dataclass(frozen=True)
class RunConfig:
    """Validated run description; every referenced input path exists."""

    concepts: Path | None
    descriptions: Path | None
    associations: Path | None
    id_map: IdMap
    exclude_modules: tuple
    families: tuple
    splits: tuple
    strategies: tuple
    seed: int
    threshold: int
    embeddings: tuple  # of EmbeddingSource
    metrics: tuple  # of MetricSpec
    alpha: float
    resamples: int
    datasets_dir: Path | None
    category_files: dict | None  # key -> Path for _CATEGORY_KEYS
    out_dir: Path
    config_hash: str


# ---------------------------------------------------------------------------
# config loading


def _split_list(value: str) -> list:
    return [item.strip() for item in value.split(",") if item.strip()]


def _subset_or_error(items, allowed, what) -> tuple:
    for item in items:
        if item not in allowed:
            raise ConfigError(f"unknown {what} {item!r}; expected one of {allowed}")
    return tuple(items)


def _raw_sections(path: Path) -> dict:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raw = {}
    for section in parser.sections():
        if section not in _ALLOWED_KEYS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        allowed = _ALLOWED_KEYS[section]
        raw[section] = {}
        for key, value in parser.items(section):
            if allowed is not None and key not in allowed:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            raw[section][key] = value.strip()
    return raw


def _config_hash(raw: dict) -> str:
    lines = sorted(
        f"{section}.{key}={value}"
        for section, items in raw.items()
        for key, value in items.items()
    )
    digest = hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
    return digest[:12]


def _existing_path(base: Path, value: str, where: str) -> Path:
    p = Path(value)
    if not p.is_absolute():
        p = base / p
    if not p.exists():
        raise ConfigError(f"missing input path: {p} (from {where})")
    return p


def _int_option(raw: dict, section: str, key: str, default: int) -> int:
    value = raw.get(section, {}).get(key)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}") from exc


def load_config(path: Path, seed: int | None = None, out: str | None = None) -> RunConfig:
    """Parse and validate an INI run config; relative paths resolve next to it."""
    path = Path(path)
    raw = _raw_sections(path)
    if seed is not None:
        raw.setdefault("build", {})["seed"] = str(seed)
    if out is not None:
        raw.setdefault("output", {})["dir"] = str(out)
    base = path.resolve().parent

    onto = raw.get("ontology", {})
    concepts = descriptions = associations = None
    if "concepts" in onto:
        concepts = _existing_path(base, onto["concepts"], "ontology.concepts")
    if "descriptions" in onto:
        descriptions = _existing_path(base, onto["descriptions"], "ontology.descriptions")
    if "associations" in onto:
        associations = _existing_path(base, onto["associations"], "ontology.associations")

    id_map = IdMap()
    refsets = dict(id_map.association_refsets)
    for key, kind in (
        ("possibly_equivalent_to", POSSIBLY_EQUIVALENT_TO),
        ("replaced_by", REPLACED_BY),
        ("same_as", SAME_AS),
    ):
        if key in onto:
            refsets = {r: k for r, k in refsets.items() if k != kind}
            for refset_id in _split_list(onto[key]):
                refsets[refset_id] = kind
    id_map = IdMap(
        fsn_type_ids=frozenset(_split_list(onto["fsn_types"]))
        if "fsn_types" in onto else id_map.fsn_type_ids,
        synonym_type_ids=frozenset(_split_list(onto["synonym_types"]))
        if "synonym_types" in onto else id_map.synonym_type_ids,
        association_refsets=refsets,
    )
    exclude_modules = tuple(_split_list(onto.get("exclude_modules", "")))

    build = raw.get("build", {})
    families = _subset_or_error(
        _split_list(build.get("families", ",".join(FAMILIES))), FAMILIES, "family")
    splits = _subset_or_error(
        _split_list(build.get("splits", "easy,hard")), SPLITS, "split")
    strategies = _subset_or_error(
        _split_list(build.get("strategies", ",".join(STRATEGIES))), STRATEGIES, "strategy")
    the_seed = _int_option(raw, "build", "seed", 0)
    threshold = _int_option(raw, "build", "threshold", 5)
    if threshold < 0:
        raise ConfigError("build.threshold must be non-negative")

    sources = []
    for name, value in raw.get("embeddings", {}).items():
        kind, sep, rel = value.partition(":")
        if not sep or kind not in (WORD, TERM):
            raise ConfigError(
                f"embedding {name!r} must be '{WORD}:<path>' or '{TERM}:<path>', got {value!r}")
        sources.append(EmbeddingSource(
            name=name, kind=kind,
            path=_existing_path(base, rel, f"embeddings.{name}")))

    ev = raw.get("eval", {})
    metric_names = _split_list(ev.get("metrics", ",".join(METRIC_NAMES)))
    metrics = []
    for m in metric_names:
        try:
            metrics.append(MetricSpec.parse(m))
        except ValueError as exc:
            raise ConfigError(f"unknown metric {m!r}: {exc}") from exc
    metrics = tuple(metrics)
    try:
        alpha = float(ev.get("alpha", "0.05"))
    except ValueError as exc:
        raise ConfigError(f"eval.alpha must be a number, got {ev['alpha']!r}") from exc
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"eval.alpha must be in (0, 1), got {alpha}")
    resamples = _int_option(raw, "eval", "resamples", 10_000)
    if resamples < 1:
        raise ConfigError("eval.resamples must be positive")
    datasets_dir = None
    if "datasets" in ev:
        datasets_dir = _existing_path(base, ev["datasets"], "eval.datasets")

    category_files = None
    if "category" in raw:
        cat = raw["category"]
        missing = [k for k in _CATEGORY_KEYS if k not in cat]
        if missing:
            raise ConfigError(f"[category] is missing keys: {', '.join(missing)}")
        category_files = {
            k: _existing_path(base, cat[k], f"category.{k}") for k in _CATEGORY_KEYS
        }

    out_value = raw.get("output", {}).get("dir", "out")
    out_dir = Path(out_value)
    if not out_dir.is_absolute():
        out_dir = base / out_dir

    return RunConfig(
        concepts=concepts,
        descriptions=descriptions,
        associations=associations,
        id_map=id_map,
        exclude_modules=exclude_modules,
        families=families,
        splits=splits,
        strategies=strategies,
        seed=the_seed,
        threshold=threshold,
        embeddings=tuple(sources),
        metrics=metrics,
        alpha=alpha,
        resamples=resamples,
        datasets_dir=datasets_dir,
        category_files=category_files,
        out_dir=out_dir,
        config_hash=_config_hash(raw),
    )


# ---------------------------------------------------------------------------
# shared plumbing


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        if np.isnan(value):
            return "NA"
        return "%.10g" % value
    return str(value)


def _write_report(path: Path, config: RunConfig, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#tool_version={__version__}\n")
        fh.write(f"#config_hash={config.config_hash}\n")
        fh.write(f"#seed={config.seed}\n")
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) for v in row) + "\n")
    print(f"wrote {path}")


def _load_embeddings(config: RunConfig) -> list:
    if not config.embeddings:
        raise ConfigError("this command needs at least one entry in [embeddings]")
    loaded = []
    for source in config.embeddings:
        if source.kind == WORD:
            loaded.append(load_word_vectors_text(source.path, name=source.name))
        else:
            loaded.append(load_term_vectors(source.path, name=source.name))
    return loaded


def _load_datasets(config: RunConfig, graded: bool = True) -> list:
    directory = config.datasets_dir or (config.out_dir / "datasets")
    if not directory.is_dir():
        raise ConfigError(f"dataset directory not found: {directory}")
    datasets = [import_tsv(p) for p in sorted(directory.glob("*.tsv"))]
    if graded:
        datasets += [read_graded_csv(p) for p in sorted(directory.glob("*.csv"))]
    if not datasets:
        raise ConfigError(f"no dataset files (*.tsv or *.csv) in {directory}")
    return datasets


def _gold_values(ds) -> np.ndarray:
    if isinstance(ds, GradedDataset):
        return np.array([t[2] for t in ds.pairs], dtype=np.float64)
    return np.array([p.label for p in ds.pairs], dtype=np.int64)


def _covered_idx(ds, embeddings) -> np.ndarray:
    return covered_subset([ds], embeddings)[ds.name]


def _stats_groups(datasets) -> dict:
    groups = {}
    for ds in datasets:
        if ds.neg_strategy not in (RANDOM, LEVENSHTEIN):
            raise ConfigError(
                f"dataset {ds.name}: unknown negative strategy {ds.neg_strategy!r}")
        by_strategy = groups.setdefault((ds.family, ds.split), {})
        if ds.neg_strategy in by_strategy:
            raise ConfigError(
                f"duplicate dataset for {ds.family}/{ds.split}/{ds.neg_strategy}")
        by_strategy[ds.neg_strategy] = ds
    return groups


def _stats_rows(groups: dict) -> list:
    def order(key):
        family, split = key
        fam = FAMILIES.index(family) if family in FAMILIES else len(FAMILIES)
        spl = SPLITS.index(split) if split in SPLITS else len(SPLITS)
        return (fam, family, spl, split)

    rows = []
    for family, split in sorted(groups, key=order):
        by_strategy = groups[(family, split)]
        try:
            st = dataset_stats(
                random_dataset=by_strategy.get(RANDOM),
                levenshtein_dataset=by_strategy.get(LEVENSHTEIN),
            )
        except ValueError as exc:
            raise ConfigError(f"inconsistent datasets for {family}/{split}: {exc}") from exc
        rows.append((
            family, split, st.size, st.avg_lev_pos,
            st.avg_lev_neg_random, st.avg_lev_neg_levenshtein,
        ))
    return rows


# ---------------------------------------------------------------------------
# subcommands


def cmd_build(config: RunConfig, jobs: int = 1):
    """Generate the configured datasets plus a per-(family, split) stats table."""
    if config.concepts is None or config.descriptions is None:
        raise ConfigError("build requires [ontology] concepts and descriptions paths")
    snapshot = parse_release(
        config.concepts, config.descriptions, config.associations, id_map=config.id_map)
    for module_id in config.exclude_modules:
        snapshot = exclude_module(snapshot, module_id)

    ds_dir = config.out_dir / "datasets"
    ds_dir.mkdir(parents=True, exist_ok=True)
    spec = SplitSpec(threshold=config.threshold)
    built = {}
    for family in config.families:
        for split in config.splits:
            for strategy in config.strategies:
                ds = assemble_dataset(
                    snapshot, family, split, strategy, config.seed, spec=spec, jobs=jobs)
                built[(family, split, strategy)] = ds
                export_tsv(ds, ds_dir / f"{family}_{split}_{strategy}.tsv",
                           extra_metadata={"tool_version": __version__,
                                           "config_hash": config.config_hash})
    print(f"wrote {len(built)} datasets to {ds_dir}")

    groups = _stats_groups(built.values())
    _write_report(config.out_dir / "dataset_stats.tsv", config,
                  STATS_HEADER, _stats_rows(groups))


def cmd_eval(config: RunConfig, jobs: int = 1):
    """Score every (dataset, embedding, metric) triple on the jointly covered subset."""
    datasets = _load_datasets(config)
    embeddings = _load_embeddings(config)
    rows = []
    for ds in datasets:
        idx = _covered_idx(ds, embeddings)
        n_total = len(ds.pairs)
        coverage = idx.size / n_total if n_total else 0.0
        gold = _gold_values(ds)
        graded = isinstance(ds, GradedDataset)
        for emb in embeddings:
            for metric in config.metrics:
                row = [ds.name, emb.name, metric.name, n_total, idx.size, coverage,
                       None, None, None, None]
                if idx.size:
                    scores = score_dataset(ds, emb, metric)
                    valid = np.array([i for i in idx if scores[i] is not None],
                                     dtype=np.int64)
                    if valid.size < idx.size:
                        logger.warning(
                            "%s/%s/%s: %d covered pairs have undefined scores",
                            ds.name, emb.name, metric.name, idx.size - valid.size)
                    if valid.size:
                        values = np.array([scores[i] for i in valid], dtype=np.float64)
                        try:
                            if graded:
                                row[6] = spearman_correlation(values, gold[valid])
                            else:
                                res = classification_result(values, gold[valid])
                                row[7] = res.accuracy
                                row[8] = res.auc
                                row[9] = res.threshold
                        except (EvaluationError, UndefinedScoreError) as exc:
                            logger.warning("%s/%s/%s: %s",
                                           ds.name, emb.name, metric.name, exc)
                rows.append(tuple(row))
    _write_report(config.out_dir / "eval_report.tsv", config, EVAL_HEADER, rows)


def cmd_compare(config: RunConfig, jobs: int = 1):
    """Pairwise significance verdicts between embeddings on identical subsets."""
    datasets = _load_datasets(config)
    embeddings = _load_embeddings(config)
    if len(embeddings) < 2:
        raise ConfigError("compare needs at least 2 entries in [embeddings]")
    names = tuple(e.name for e in embeddings)
    bconf = BootstrapConfig(
        resamples=config.resamples, alpha=config.alpha, seed=config.seed)
    rows = []
    for ds in datasets:
        idx = _covered_idx(ds, embeddings)
        if idx.size == 0:
            continue  # covered_subset already warned
        gold = _gold_values(ds)
        mode = CORRELATION if isinstance(ds, GradedDataset) else CLASSIFICATION
        for metric in config.metrics:
            per_entity = [score_dataset(ds, emb, metric) for emb in embeddings]
            keep = np.array(
                [i for i in idx if all(s[i] is not None for s in per_entity)],
                dtype=np.int64)
            if keep.size < idx.size:
                logger.warning(
                    "%s/%s: dropped %d covered pairs with undefined scores",
                    ds.name, metric.name, idx.size - keep.size)
            if keep.size == 0:
                logger.warning("%s/%s: nothing left to compare", ds.name, metric.name)
                continue
            matrix = significance_matrix(
                names,
                {name: np.array([s[i] for i in keep], dtype=np.float64)
                 for name, s in zip(names, per_entity)},
                gold[keep],
                mode=mode,
                alpha=config.alpha,
                config=bconf,
            )
            for name in names:
                verdicts = ";".join(
                    f"{other}={matrix.verdicts[(name, other)]}"
                    for other in names if other != name)
                rows.append((
                    ds.name, metric.name, name,
                    matrix.better_count(name), matrix.worse_count(name),
                    matrix.comparisons, matrix.alpha / matrix.comparisons, verdicts,
                ))
    _write_report(config.out_dir / "compare_report.tsv", config, COMPARE_HEADER, rows)


def cmd_category(config: RunConfig, jobs: int = 1):
    """Triple-ranking overlap error and within/cross category mean similarities."""
    if config.category_files is None:
        raise ConfigError("category requires a [category] section with the three term files")
    dp, tp, org = (load_category_terms(config.category_files[k]) for k in _CATEGORY_KEYS)
    partition = CategoryPartition(dp_terms=dp, tp_terms=tp, org_terms=org)
    embeddings = _load_embeddings(config)
    rows = []
    for emb in embeddings:
        for metric in config.metrics:
            overlap = overlap_error(partition, emb, metric)
            means = avg_category_similarity(partition, emb, metric)
            rows.append((
                emb.name, metric.name,
                overlap.n_dp, overlap.n_tp, overlap.n_org,
                overlap.raw_count, overlap.relative,
                means.dp_tp, means.dp_org, means.dp_dp, means.tp_tp, means.org_org,
            ))
    _write_report(config.out_dir / "category_report.tsv", config, CATEGORY_HEADER, rows)


def cmd_stats(config: RunConfig, jobs: int = 1):
    """Recompute the dataset stats table from previously exported TSV files."""
    datasets = _load_datasets(config, graded=False)
    groups = _stats_groups(datasets)
    _write_report(config.out_dir / "dataset_stats.tsv", config,
                  STATS_HEADER, _stats_rows(groups))


def cmd_coverage(config: RunConfig, jobs: int = 1):
    """Per-embedding and joint dataset coverage plus the vocabulary overlap matrix."""
    datasets = _load_datasets(config)
    embeddings = _load_embeddings(config)
    report = coverage_report(datasets, embeddings)
    rows = []
    for ds in datasets:
        for emb in embeddings:
            rows.append((ds.name, emb.name, len(ds.pairs),
                         report.per_embedding[(emb.name, ds.name)]))
        rows.append((ds.name, "(joint)", len(ds.pairs), report.joint[ds.name]))
    _write_report(config.out_dir / "coverage_report.tsv", config, COVERAGE_HEADER, rows)

    names = [e.name for e in embeddings]
    overlap_rows = [
        tuple([e1.name] + [vocab_overlap(e1, e2) for e2 in embeddings])
        for e1 in embeddings
    ]
    _write_report(config.out_dir / "vocab_overlap.tsv", config,
                  tuple(["embedding"] + names), overlap_rows)


_HANDLERS = {
    "build": cmd_build,
    "eval": cmd_eval,
    "compare": cmd_compare,
    "category": cmd_category,
    "stats": cmd_stats,
    "coverage": cmd_coverage,
}


# ---------------------------------------------------------------------------
# entry point


class _CountingHandler(logging.Handler):
    """Counts package warnings and mirrors them to stderr."""

    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.count = 0

    def emit(self, record):
        self.count += 1
        sys.stderr.write(f"{record.levelname.lower()}: {record.getMessage()}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontosim",
        description="Build term-similarity benchmarks and evaluate embeddings on them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler in _HANDLERS.items():
        p = sub.add_parser(name, help=handler.__doc__.splitlines()[0].rstrip("."))
        p.add_argument("--config", required=True, help="path to the INI run config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed from the config")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker cap for parallel sections (default 1)")
        p.add_argument("--out", default=None,
                       help="override the output directory from the config")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    counter = _CountingHandler()
    package_logger = logging.getLogger("ontosim")
    package_logger.addHandler(counter)
    try:
        config = load_config(Path(args.config), seed=args.seed, out=args.out)
        _HANDLERS[args.command](config, jobs=args.jobs)
    except (OntosimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    finally:
        package_logger.removeHandler(counter)
    return 1 if counter.count else 0


if __name__ == "__main__":
    sys.exit(main())
