"""``mine`` command line entry point and the run orchestration behind it."""
import argparse
import dataclasses
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .exceptions import ConfigError, InsightMinerError, ProviderError
from .estimators import InsightMiner
from .patterns import Thresholds
from .providers import ENV_ENDPOINT, HashingEmbedder, HTTPChatProvider, RemoteEmbedder, ReplayProvider
from .questions import QUGenParams
from .search import SearchParams
from .table import load_csv, load_metadata

logger = logging.getLogger("insightminer")

MODES = ("quis", "onlystats")
REPORT_NAME = "report.json"


@dataclass
class RunConfig:
    dataset: Optional[str] = None
    meta: Optional[str] = None
    mode: str = "quis"
    seed: int = 0
    out: str = "insights_out"
    llm_endpoint: Optional[str] = None
    llm_model: Optional[str] = None
    llm_stub: Optional[str] = None
    llm_stats: bool = False
    embedder: str = "fallback"
    embed_endpoint: Optional[str] = None
    qugen: QUGenParams = field(default_factory=QUGenParams)
    search: SearchParams = field(default_factory=SearchParams)
    thresholds: Thresholds = field(default_factory=Thresholds)
    top_k: int = 20
    insight_cap: int = 10
    record_timings: bool = False

    _NESTED = {"qugen": QUGenParams, "search": SearchParams, "thresholds": Thresholds}

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            nested = cls._NESTED.get(key)
            if nested is not None and isinstance(value, dict):
                try:
                    value = nested(**value)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"invalid '{key}' section: {exc}") from exc
            kwargs[key] = value
        return cls(**kwargs)

    def echo(self):
        """Configuration as recorded in the report (no output path, so reruns elsewhere compare equal)."""
        return {
            "dataset": self.dataset,
            "meta": self.meta,
            "mode": self.mode,
            "seed": self.seed,
            "llm": "stub" if self.llm_stub else ("http" if self.mode == "quis" else None),
            "llm_stats": self.llm_stats,
            "embedder": self.embedder,
            "qugen": dataclasses.asdict(self.qugen),
            "search": {k: v for k, v in dataclasses.asdict(self.search).items() if k != "seed"},
            "thresholds": dataclasses.asdict(self.thresholds),
            "top_k": self.top_k,
            "insight_cap": self.insight_cap,
        }


@dataclass
class RunReport:
    config: dict
    cards: list
    stage_counts: dict
    insights: list
    avg_normalized_score: float
    timings_ms: dict
    diagnostics: list = field(default_factory=list)
    record_timings: bool = False

    def to_json_dict(self):
        return {
            "config": self.config,
            "cards": self.cards,
            "stage_counts": self.stage_counts,
            "insights": self.insights,
            "avg_normalized_score": self.avg_normalized_score,
            "timings_ms": self.timings_ms if self.record_timings else {},
        }


def _validate(config):
    if config.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {config.mode!r}")
    if not config.dataset:
        raise ConfigError("no dataset given")
    if not Path(config.dataset).is_file():
        raise ConfigError(f"dataset file {config.dataset} does not exist")
    if config.meta and not Path(config.meta).is_file():
        raise ConfigError(f"metadata file {config.meta} does not exist")
    if config.embedder not in ("fallback", "remote"):
        raise ConfigError("embedder must be 'remote' or 'fallback'")
    if config.llm_stub and not Path(config.llm_stub).is_dir():
        raise ConfigError(f"LLM stub directory {config.llm_stub} does not exist")
    if config.mode == "quis" and not (config.llm_stub or config.llm_endpoint or os.environ.get(ENV_ENDPOINT)):
        raise ConfigError(f"quis mode needs --llm-stub, --llm-endpoint or {ENV_ENDPOINT}")
    if config.top_k < 0 or config.insight_cap < 1:
        raise ConfigError("top_k must be >= 0 and insight_cap >= 1")
    out = Path(config.out)
    if out.exists() and (not out.is_dir() or (any(out.iterdir()) and not (out / REPORT_NAME).is_file())):
        raise ConfigError(f"output path {out} exists and is not a previous report directory")


def _providers(config):
    llm = None
    if config.llm_stub:
        llm = ReplayProvider.from_directory(config.llm_stub)
    elif config.mode == "quis":
        llm = HTTPChatProvider(config.llm_endpoint, config.llm_model)
    if config.embedder == "remote":
        embedder = RemoteEmbedder(config.embed_endpoint)
    else:
        embedder = HashingEmbedder()
    return llm, embedder


def _insight_record(card_index, insight, chart_file):
    return {
        "card_index": card_index,
        "breakdown": insight.breakdown,
        "measure": str(insight.measure),
        "subspace": insight.subspace.to_list(),
        "pattern": insight.pattern.value,
        "raw_score": insight.raw_score,
        "normalized_score": insight.normalized_score,
        "narrative": insight.narrative,
        "chart_file": chart_file,
        "chart_kind": insight.chart.kind.value,
        "view": insight.view.to_list(),
    }


def run_pipeline(config):
    """Load the table, generate cards, mine insights and write the report plus one SVG per insight.

    Everything is written into a temporary directory next to ``config.out``
    and moved into place only when the run succeeds.
    """
    _validate(config)
    started = time.perf_counter()
    dataset = load_csv(config.dataset)
    if config.meta:
        meta = load_metadata(config.meta)
        dataset = dataset.with_metadata(meta["name"], meta["description"], meta["columns"])
    llm, embedder = _providers(config)

    q, s, t = config.qugen, config.search, config.thresholds
    miner = InsightMiner(
        card_source=config.mode, llm=llm, embedder=embedder, top_k=config.top_k,
        iterations=q.iterations, samples_per_iteration=q.samples_per_iteration, temperature=q.temperature,
        in_context_examples=q.in_context_examples, relevance_threshold=q.relevance_threshold,
        dedup_threshold=q.dedup_threshold, llm_stats=config.llm_stats,
        beam_width=s.beam_width, exp_factor=s.exp_factor, max_depth=s.max_depth, w_llm=s.w_llm,
        trend_threshold=t.trend, ov_threshold=t.outstanding_value, attribution_threshold=t.attribution,
        dd_threshold=t.distribution_difference, insight_cap=config.insight_cap, random_state=config.seed,
    )
    miner.fit(dataset)
    counts = miner.stage_counts_
    if (config.mode == "quis" and not config.llm_stub
            and counts.get("failed_iterations", 0) >= q.iterations):
        raise ProviderError("every question-generation iteration failed")

    out = Path(config.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        records = []
        per_name = {}
        for card_index, insight in miner.insights_:
            stem = f"{card_index}_{insight.pattern.value}"
            n = per_name.get(stem, 0)
            per_name[stem] = n + 1
            chart_file = f"{stem}_{n}.svg"
            (tmp / chart_file).write_text(insight.chart.rendered, encoding="utf-8")
            records.append(_insight_record(card_index, insight, chart_file))
        timings = dict(miner.timings_ms_)
        timings["total"] = (time.perf_counter() - started) * 1000.0
        report = RunReport(
            config=config.echo(),
            cards=[c.to_dict() for c in miner.cards_],
            stage_counts=counts,
            insights=records,
            avg_normalized_score=miner.score(),
            timings_ms=timings,
            diagnostics=miner.diagnostics_,
            record_timings=config.record_timings,
        )
        (tmp / REPORT_NAME).write_text(
            json.dumps(report.to_json_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        (tmp / "timings.json").write_text(json.dumps(timings, indent=2) + "\n", encoding="utf-8")
        if out.exists():
            shutil.rmtree(out)
        os.replace(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return report


def build_parser():
    p = argparse.ArgumentParser(prog="mine", description="Generate analysis questions for a CSV table and mine "
                                                         "scored insights with charts.")
    p.add_argument("--dataset", help="input CSV file")
    p.add_argument("--meta", help="JSON sidecar with name, description and column descriptions")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--config", help="JSON run configuration; command-line flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default: insights_out)")
    p.add_argument("--llm-endpoint", help=f"chat-completion URL (or set {ENV_ENDPOINT})")
    p.add_argument("--llm-model")
    p.add_argument("--llm-stub", help="directory of canned LLM responses, one file per call")
    p.add_argument("--llm-stats", action="store_true", default=None,
                   help="let the LLM pose the key-statistics questions for the prompt")
    p.add_argument("--embedder", choices=("remote", "fallback"))
    p.add_argument("--embed-endpoint")
    p.add_argument("--beam-width", type=int)
    p.add_argument("--exp-factor", type=int)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--w-llm", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--top-k", type=int)
    p.add_argument("--insight-cap", type=int)
    p.add_argument("--record-timings", action="store_true", default=None,
                   help="include stage timings in report.json (makes reruns differ)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


_TOP_LEVEL = ("dataset", "meta", "mode", "seed", "out", "llm_endpoint", "llm_model", "llm_stub", "llm_stats",
              "embedder", "embed_endpoint", "top_k", "insight_cap", "record_timings")


def config_from_args(args):
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
    config = RunConfig.from_dict(data)
    for name in _TOP_LEVEL:
        value = getattr(args, name)
        if value is not None:
            setattr(config, name, value)
    search = {k: getattr(args, k) for k in ("beam_width", "exp_factor", "max_depth", "w_llm")
              if getattr(args, k) is not None}
    try:
        if search:
            config.search = dataclasses.replace(config.search, **search)
        if args.iterations is not None:
            config.qugen = dataclasses.replace(config.qugen, iterations=args.iterations)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return config


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        report = run_pipeline(config)
    except ConfigError as exc:
        print(f"mine: configuration error: {exc}", file=sys.stderr)
        return 2
    except (InsightMinerError, OSError) as exc:
        print(f"mine: {exc}", file=sys.stderr)
        return 1
    print(f"{len(report.cards)} cards, {len(report.insights)} insights, "
          f"average normalized score {report.avg_normalized_score:.3f} -> {config.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
