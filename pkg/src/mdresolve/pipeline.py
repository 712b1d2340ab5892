"""End-to-end orchestration driven by one INI file.

Stages run in order: ingest, simcache, block, train, classify, merge,
evaluate.  Paths in the config are relative to the config file.  Every
artifact is written with sorted rows and fixed float formatting, so equal
inputs and seed give byte-identical outputs.
"""
from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .chase import BlockAssignment, candidate_pairs, enforce_blocking, format_pairs
from .classifier import (
    FeatureSpec,
    SvmModel,
    accuracy,
    build_training_set,
    detect_duplicates,
    load_model,
    parse_feature_spec,
    read_labeled_pairs,
    split_training,
    train_svm,
)
from .errors import PipelineError, ResolveError
from .mdlang import MDSet, parse_mds
from .merge import ResolvedInstance, format_duplicates, merge_duplicates, mfs_from_mdset
from .metrics import check_gold, evaluate, pooled, read_gold, standard_blocking
from .schema import Instance, Schema, load_instance, load_schema, validate_instance
from .similarity import SimCache, SimSpec, build_sim_cache, parse_sim_specs

log = logging.getLogger(__name__)

STAGES = ("ingest", "simcache", "block", "train", "classify", "merge", "evaluate")
BLOCKING_MODES = ("standard", "md", "both")


@dataclass
class PipelineConfig:
    base: Path
    schema: Path
    rules: Path | None
    sims: Path | None
    data: dict[str, Path]
    seed: int = 0
    blocking: str = "md"
    lam: float = 0.01
    epochs: int = 200
    split: float = 0.8
    length_filter: bool = False
    standard_keys: dict[str, list[str]] = field(default_factory=dict)
    features: dict[str, dict[str, str]] = field(default_factory=dict)
    training: dict[str, Path] = field(default_factory=dict)
    models: dict[str, Path] = field(default_factory=dict)
    gold: Path | None = None


def load_config(path: str | Path, seed: int | None = None, blocking: str | None = None) -> PipelineConfig:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str  # relation and slot names are case-sensitive
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise PipelineError("config", str(exc)) from None
    base = path.parent

    def rel_path(value: str) -> Path:
        return (base / value.strip()).resolve()

    if not parser.has_section("pipeline") or "schema" not in parser["pipeline"]:
        raise PipelineError("config", f"{path}: [pipeline] needs a schema entry")
    p = parser["pipeline"]
    try:
        cfg = PipelineConfig(
            base=base,
            schema=rel_path(p["schema"]),
            rules=rel_path(p["rules"]) if "rules" in p else None,
            sims=rel_path(p["sims"]) if "sims" in p else None,
            data={k: rel_path(v) for k, v in parser["data"].items()} if parser.has_section("data") else {},
            seed=p.getint("seed", 0) if seed is None else seed,
            blocking=blocking or p.get("blocking", "md"),
            lam=p.getfloat("lambda", 0.01),
            epochs=p.getint("epochs", 200),
            split=p.getfloat("split", 0.8),
            length_filter=p.getboolean("length_filter", False),
        )
    except ValueError as exc:
        raise PipelineError("config", str(exc)) from None
    if cfg.blocking not in BLOCKING_MODES:
        raise PipelineError("config", f"blocking must be one of {', '.join(BLOCKING_MODES)}")
    if parser.has_section("standard"):
        cfg.standard_keys = {
            rel: [k.strip() for k in v.split(",") if k.strip()] for rel, v in parser["standard"].items()
        }
    for section in parser.sections():
        if section.startswith("features."):
            cfg.features[section.split(".", 1)[1]] = dict(parser[section].items())
    if parser.has_section("training"):
        cfg.training = {k: rel_path(v) for k, v in parser["training"].items()}
    if parser.has_section("model"):
        cfg.models = {k: rel_path(v) for k, v in parser["model"].items()}
    if parser.has_section("gold") and "file" in parser["gold"]:
        cfg.gold = rel_path(parser["gold"]["file"])
    return cfg


@dataclass
class PipelineState:
    config: PipelineConfig
    schema: Schema | None = None
    instance: Instance | None = None
    specs: dict[str, SimSpec] = field(default_factory=dict)
    mds: MDSet | None = None
    cache: SimCache | None = None
    assignments: dict[str, BlockAssignment] = field(default_factory=dict)
    candidates: dict[str, dict[str, frozenset]] = field(default_factory=dict)
    feature_specs: dict[str, FeatureSpec] = field(default_factory=dict)
    models: dict[str, SvmModel] = field(default_factory=dict)
    test_accuracy: dict[str, float | None] = field(default_factory=dict)
    duplicates: dict[str, frozenset] = field(default_factory=dict)
    skipped: dict[str, list] = field(default_factory=dict)
    resolved: ResolvedInstance | None = None
    metrics: str | None = None


def _fmt(v: float | None) -> str:
    return "undefined" if v is None else f"{v:.6f}"


class Pipeline:
    def __init__(self, config: PipelineConfig, out_dir: str | Path | None = None):
        self.state = PipelineState(config)
        self.out = Path(out_dir) if out_dir is not None else None

    def _write(self, name: str, text: str) -> None:
        if self.out is None:
            return
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")

    def run(self, until: str = "evaluate", classify: bool = True) -> PipelineState:
        """Run the stages up to ``until``; ``classify=False`` skips train, classify and merge."""
        if until not in STAGES:
            raise PipelineError("config", f"unknown stage {until!r}")
        for stage in STAGES[: STAGES.index(until) + 1]:
            if not classify and stage in ("train", "classify", "merge"):
                continue
            log.info("stage %s", stage)
            try:
                getattr(self, f"stage_{stage}")()
            except PipelineError:
                raise
            except (ResolveError, OSError, KeyError, ValueError) as exc:
                raise PipelineError(stage, str(exc)) from exc
        return self.state

    # -- stages

    def stage_ingest(self) -> None:
        cfg, st = self.state.config, self.state
        schema_text = cfg.schema.read_text(encoding="utf-8")
        st.schema = load_schema(schema_text)
        missing = sorted(set(cfg.data) - set(st.schema.relation_names))
        if missing:
            raise ResolveError(f"[data] names undeclared relations {missing}")
        st.instance = load_instance(st.schema, cfg.data)
        sims_text = cfg.sims.read_text(encoding="utf-8") if cfg.sims else schema_text
        st.specs = parse_sim_specs(sims_text, st.schema)
        if cfg.rules is not None:
            st.mds = parse_mds(cfg.rules.read_text(encoding="utf-8"), st.schema, st.specs)
        self._write("validation.txt", validate_instance(st.instance, st.schema).format())

    def stage_simcache(self) -> None:
        st = self.state
        st.cache = build_sim_cache(st.instance, st.specs, st.config.length_filter)
        self._write("simcache.tsv", st.cache.dump())

    def stage_block(self) -> None:
        st, cfg = self.state, self.state.config
        if cfg.blocking in ("standard", "both"):
            st.assignments["standard"] = standard_blocking(st.instance, cfg.standard_keys, st.cache)
        if cfg.blocking in ("md", "both"):
            if st.mds is None:
                raise ResolveError("MD blocking needs a rules file")
            st.assignments["md"] = enforce_blocking(st.instance, st.mds, st.cache, seed=cfg.seed)
        for method, assignment in st.assignments.items():
            st.candidates[method] = candidate_pairs(assignment)
            self._write(f"blocks.{method}.tsv", assignment.dump_blocks())
            self._write(f"lineage.{method}.tsv", assignment.dump_lineage())
            self._write(f"candidates.{method}.tsv", format_pairs(st.candidates[method]))

    @property
    def _classify_candidates(self) -> dict[str, frozenset]:
        st = self.state
        return st.candidates["md"] if "md" in st.candidates else st.candidates["standard"]

    def stage_train(self) -> None:
        st, cfg = self.state, self.state.config
        for rel, entries in sorted(cfg.features.items()):
            st.feature_specs[rel] = parse_feature_spec(rel, entries, st.schema)
        for rel in sorted(st.feature_specs):
            if rel in cfg.models and cfg.models[rel].exists():
                st.models[rel] = load_model(cfg.models[rel].read_text(encoding="utf-8"))
                continue
            if rel not in cfg.training:
                continue  # classify reports the gap
            rows = read_labeled_pairs(cfg.training[rel])
            pairs = build_training_set(rows, rel, st.feature_specs[rel], st.instance, st.cache)
            train, test = split_training(pairs.vectors, cfg.split, cfg.seed)
            st.models[rel] = train_svm(train, cfg.lam, cfg.epochs, cfg.seed)
            st.test_accuracy[rel] = accuracy(st.models[rel], test)
            self._write(f"model.{rel}.txt", st.models[rel].dump())

    def stage_classify(self) -> None:
        st = self.state
        candidates = self._classify_candidates
        for rel in sorted(st.feature_specs):
            if rel not in st.models:
                raise PipelineError("classify", f"no model file and no training data for {rel}")
            found = detect_duplicates(st.models[rel], candidates.get(rel, ()), st.feature_specs[rel], st.instance, st.cache)
            st.duplicates[rel] = found.duplicates
            st.skipped[rel] = found.skipped
        self._write("duplicates.tsv", format_duplicates(st.duplicates))
        lines = [f"{rel}\t{s.rid1}\t{s.rid2}\t{s.slot}" for rel in sorted(st.skipped) for s in st.skipped[rel]]
        self._write("skipped.tsv", "".join(line + "\n" for line in lines))

    def stage_merge(self) -> None:
        st = self.state
        mfs = mfs_from_mdset(st.mds.merges) if st.mds is not None else {}
        st.resolved = merge_duplicates(st.instance, st.duplicates, mfs)
        if self.out is not None:
            st.resolved.write(self.out / "resolved")

    def stage_evaluate(self) -> None:
        st, cfg = self.state, self.state.config
        lines = [f"seed={cfg.seed}", f"blocking={cfg.blocking}"]
        gold = {}
        if cfg.gold is not None:
            gold = read_gold(cfg.gold)
            check_gold(gold, st.instance)
        relations = sorted(gold) if gold else sorted({r for c in st.candidates.values() for r, p in c.items() if p})
        for method in sorted(st.candidates):
            reports = []
            for rel in relations:
                rep = evaluate(st.candidates[method].get(rel, ()), gold.get(rel, ()), st.instance.size(rel))
                reports.append(rep)
                lines += rep.lines(f"{method}.{rel}")
            if reports:
                lines += pooled(reports).lines(f"{method}.all")
        for rel in sorted(st.duplicates):
            dups = st.duplicates[rel]
            hits = len(dups & frozenset(gold.get(rel, ())))
            lines.append(f"classify.{rel}.duplicates={len(dups)}")
            lines.append(f"classify.{rel}.skipped={len(st.skipped.get(rel, ()))}")
            lines.append(f"classify.{rel}.true_duplicates={hits}")
            if rel in st.test_accuracy:
                lines.append(f"classify.{rel}.test_accuracy={_fmt(st.test_accuracy[rel])}")
        st.metrics = "".join(line + "\n" for line in lines)
        self._write("metrics.txt", st.metrics)


def run_pipeline(config: str | Path | PipelineConfig, out_dir: str | Path | None = None,
                 until: str = "evaluate", seed: int | None = None, blocking: str | None = None,
                 classify: bool = True) -> PipelineState:
    cfg = config if isinstance(config, PipelineConfig) else load_config(config, seed, blocking)
    return Pipeline(cfg, out_dir).run(until, classify)
