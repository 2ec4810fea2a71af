"""End-to-end orchestration: subtopics per window, per-cell scoring, reports.

For every time window the pipeline shortlists subtopics (or takes a
pre-specified query list), filters the records per subtopic, prepares the
endorsement graph, and scores sized graphs with the bisection + random-walk
stack; sentiment aggregates ride along when a lexicon is configured. Each
(subtopic, window) cell yields exactly one report row; failures and
under-threshold graphs are data in the row, never batch aborts.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence
from urllib.parse import quote

from . import sentiment as senti
from .graph import UnderSized, dump_edgelist, prepare_conversation_graph
from .ingest import (
    InteractionRecord,
    TimeWindow,
    filter_window,
    parse_records_file,
    parse_window,
)
from .ingest import EmptyInput
from .partition import bisect
from .rwc import RwcConfig, RwcResult, rwc_monte_carlo, rwc_score
from .subtopics import (
    DEFAULT_NOUN_TAGS,
    StopwordConfig,
    extract_candidate_tokens,
    load_stopwords,
    top_n_subtopics,
)

MC_CHECK_TOLERANCE = 0.02


class ConfigError(Exception):
    pass


class UnsupportedFormat(Exception):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    windows: tuple[TimeWindow, ...]
    input_path: str | None = None
    queries: tuple[str, ...] | None = None
    top_n: int = 50
    stopword_paths: tuple[str, ...] = ()
    noun_tags: frozenset[str] = field(default=DEFAULT_NOUN_TAGS)
    count_mode: str = "occurrences"
    min_rt: int = 2
    k_core_k: int = 2
    min_nodes: int = 800
    balance_eps: float = 0.05
    rwc: RwcConfig = field(default_factory=RwcConfig)
    lexicon_path: str | None = None
    score_thresh: float = 0.3
    size_thresh: int = 10_000
    senti_thresh: float = -0.5
    seed: int = 0
    tz: str = "UTC"
    phase1_scope: str = "window"
    mc_check: bool = False
    mc_walks: int = 100_000
    workers: int = 1
    dump_graphs_dir: str | None = None
    output_path: str | None = None
    output_format: str = "csv"

    def __post_init__(self) -> None:
        if not self.windows:
            raise ConfigError("at least one window is required")
        if self.top_n < 1:
            raise ConfigError(f"top_n must be >= 1, got {self.top_n}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.count_mode not in ("occurrences", "documents"):
            raise ConfigError(f"unknown count_mode: {self.count_mode!r}")
        if self.phase1_scope not in ("window", "global"):
            raise ConfigError(f"unknown phase1_scope: {self.phase1_scope!r}")


@dataclass(frozen=True)
class ControversyReport:
    """One (subtopic, window) cell of the output table."""

    subtopic: str
    window: str
    record_count: int
    node_count: int
    undersized: bool
    rwc: RwcResult | None
    sentiment_mean: float | None = None
    sentiment_std: float | None = None
    sentiment_matched: int | None = None
    error: str | None = None


_CONFIG_KEYS = {
    "input": "input_path",
    "windows": None,
    "queries": None,
    "top_n": "top_n",
    "stopwords": None,
    "noun_tags": None,
    "count_mode": "count_mode",
    "min_rt": "min_rt",
    "k_core": "k_core_k",
    "min_nodes": "min_nodes",
    "balance_eps": "balance_eps",
    "rwc": None,
    "lexicon": "lexicon_path",
    "score_thresh": "score_thresh",
    "size_thresh": "size_thresh",
    "senti_thresh": "senti_thresh",
    "seed": "seed",
    "tz": "tz",
    "phase1_scope": "phase1_scope",
    "mc_check": "mc_check",
    "mc_walks": "mc_walks",
    "workers": "workers",
    "dump_graphs": "dump_graphs_dir",
    "output": "output_path",
    "format": "output_format",
}


def config_from_dict(raw: dict) -> PipelineConfig:
    """Build a PipelineConfig from the JSON config-file shape."""
    unknown = set(raw) - set(_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "windows" not in raw:
        raise ConfigError("config requires a windows list")
    tz = raw.get("tz", "UTC")
    kwargs: dict[str, object] = {"tz": tz}
    kwargs["windows"] = tuple(parse_window(w, tz) for w in raw["windows"])
    if "queries" in raw and raw["queries"] is not None:
        kwargs["queries"] = tuple(raw["queries"])
    if "stopwords" in raw:
        kwargs["stopword_paths"] = tuple(raw["stopwords"])
    if "noun_tags" in raw:
        kwargs["noun_tags"] = frozenset(raw["noun_tags"])
    if "rwc" in raw:
        kwargs["rwc"] = RwcConfig(**raw["rwc"])
    for key, attr in _CONFIG_KEYS.items():
        if attr is not None and key in raw:
            kwargs[attr] = raw[key]
    return PipelineConfig(**kwargs)


def load_config(path: str) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(raw)


def _check_files_exist(cfg: PipelineConfig) -> None:
    paths = list(cfg.stopword_paths)
    if cfg.input_path is not None:
        paths.append(cfg.input_path)
    if cfg.lexicon_path is not None:
        paths.append(cfg.lexicon_path)
    for path in paths:
        if not os.path.exists(path):
            raise ConfigError(f"referenced file does not exist: {path}")


def cell_seed(seed: int, window_label: str, token: str) -> int:
    """Stable per-cell seed so identical cells score identically across modes."""
    digest = hashlib.sha256(f"{seed}|{window_label}|{token}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _score_cell(
    records: Sequence[InteractionRecord],
    window: TimeWindow,
    token: str,
    cfg: PipelineConfig,
    lexicon: senti.PolarityLexicon | None,
) -> ControversyReport:
    cell_records = filter_window(records, window, token)
    mean = std = None
    matched = None
    if lexicon is not None and cell_records:
        try:
            mean, std, matched = senti.aggregate_sentiment(cell_records, lexicon)
        except senti.AllUnmatched:
            pass
    try:
        prepared = prepare_conversation_graph(
            cell_records, min_rt=cfg.min_rt, k=cfg.k_core_k, min_nodes=cfg.min_nodes
        )
        if isinstance(prepared, UnderSized):
            return ControversyReport(
                token, window.label, len(cell_records), prepared.node_count,
                True, None, mean, std, matched,
            )
        if cfg.dump_graphs_dir is not None:
            name = f"{quote(token, safe='')}_{quote(window.label, safe='')}.edges"
            write_output(os.path.join(cfg.dump_graphs_dir, name),
                         dump_edgelist(prepared))
        seed = cell_seed(cfg.seed, window.label, token)
        part = bisect(prepared, eps=cfg.balance_eps, seed=seed)
        result = rwc_score(prepared, part, cfg.rwc)
        error = None
        if cfg.mc_check:
            estimate = rwc_monte_carlo(
                prepared, part, cfg.rwc, n_walks=cfg.mc_walks, seed=seed
            )
            gap = abs(estimate.score - result.score)
            if gap > MC_CHECK_TOLERANCE:
                error = (
                    f"mc-check failed: |exact - monte-carlo| = {gap:.4f} "
                    f"> {MC_CHECK_TOLERANCE}"
                )
        return ControversyReport(
            token, window.label, len(cell_records), prepared.node_count,
            False, result, mean, std, matched, error,
        )
    except Exception as exc:  # per-cell failures are report rows, not aborts
        return ControversyReport(
            token, window.label, len(cell_records), 0, False, None,
            mean, std, matched, f"{type(exc).__name__}: {exc}",
        )


def _stopword_config(cfg: PipelineConfig) -> StopwordConfig:
    custom = load_stopwords(cfg.stopword_paths) if cfg.stopword_paths else frozenset()
    return StopwordConfig(standard=frozenset(), custom=custom,
                          noun_pos_tags=frozenset(cfg.noun_tags))


def run_pipeline(
    cfg: PipelineConfig,
    records: Sequence[InteractionRecord] | None = None,
) -> list[ControversyReport]:
    """Score every (subtopic, window) cell; rows come back in window-major order."""
    _check_files_exist(cfg)
    if records is None:
        if cfg.input_path is None:
            raise ConfigError("config has no input path and no records were supplied")
        try:
            records = parse_records_file(cfg.input_path).records
        except EmptyInput:
            records = ()
    lexicon = senti.load_lexicon(cfg.lexicon_path) if cfg.lexicon_path else None
    stop_cfg = _stopword_config(cfg)
    if cfg.dump_graphs_dir is not None:
        os.makedirs(cfg.dump_graphs_dir, exist_ok=True)

    global_tokens: list[str] | None = None
    if cfg.queries is None and cfg.phase1_scope == "global":
        freq = extract_candidate_tokens(records, stop_cfg, cfg.count_mode)
        global_tokens = top_n_subtopics(freq, cfg.top_n)

    cells: list[tuple[TimeWindow, str]] = []
    for window in cfg.windows:
        if cfg.queries is not None:
            tokens: Iterable[str] = cfg.queries
        elif global_tokens is not None:
            tokens = global_tokens
        else:
            window_records = filter_window(records, window)
            freq = extract_candidate_tokens(window_records, stop_cfg, cfg.count_mode)
            tokens = top_n_subtopics(freq, cfg.top_n)
        cells.extend((window, token) for token in tokens)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            reports = list(
                pool.map(
                    lambda cell: _score_cell(records, cell[0], cell[1], cfg, lexicon),
                    cells,
                )
            )
    else:
        reports = [_score_cell(records, w, t, cfg, lexicon) for w, t in cells]
    return reports


# --- report emission ---------------------------------------------------------

_CSV_COLUMNS = [
    "subtopic", "window", "record_count", "node_count", "undersized",
    "rwc_score", "p_xx", "p_xy", "p_yy", "p_yx",
    "sentiment_mean", "sentiment_std", "sentiment_matched",
    "high_controversy", "large", "low_sentiment", "error",
]


@dataclass(frozen=True)
class _Thresholds:
    score: float = 0.3
    size: int = 10_000
    sentiment: float = -0.5


def _group_flags(r: ControversyReport, th: _Thresholds) -> tuple[bool | None, bool, bool | None]:
    high = None if r.rwc is None else r.rwc.score > th.score
    large = not r.undersized and r.node_count >= th.size
    low_senti = None if r.sentiment_mean is None else r.sentiment_mean < th.sentiment
    return high, large, low_senti


def _opt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "1" if value else "0"
    return str(value)


def _report_row(r: ControversyReport, th: _Thresholds) -> list[str]:
    high, large, low_senti = _group_flags(r, th)
    return [
        r.subtopic,
        r.window,
        str(r.record_count),
        str(r.node_count),
        "1" if r.undersized else "0",
        _opt(r.rwc.score if r.rwc else None),
        _opt(r.rwc.p_xx if r.rwc else None),
        _opt(r.rwc.p_xy if r.rwc else None),
        _opt(r.rwc.p_yy if r.rwc else None),
        _opt(r.rwc.p_yx if r.rwc else None),
        _opt(r.sentiment_mean),
        _opt(r.sentiment_std),
        _opt(r.sentiment_matched),
        _opt(high),
        _opt(large),
        _opt(low_senti),
        r.error or "",
    ]


def _emit_csv(reports: Sequence[ControversyReport], th: _Thresholds) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for r in reports:
        writer.writerow(_report_row(r, th))
    return buf.getvalue()


def parse_report_csv(text: str) -> list[ControversyReport]:
    """Inverse of the CSV emitter, for round-trips and downstream tooling."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != _CSV_COLUMNS:
        raise UnsupportedFormat(f"unexpected CSV header: {header}")
    out: list[ControversyReport] = []
    for row in reader:
        cells = dict(zip(_CSV_COLUMNS, row))
        rwc = None
        if cells["rwc_score"]:
            rwc = RwcResult(
                float(cells["p_xx"]), float(cells["p_xy"]),
                float(cells["p_yy"]), float(cells["p_yx"]),
                float(cells["rwc_score"]),
            )
        out.append(
            ControversyReport(
                cells["subtopic"],
                cells["window"],
                int(cells["record_count"]),
                int(cells["node_count"]),
                cells["undersized"] == "1",
                rwc,
                float(cells["sentiment_mean"]) if cells["sentiment_mean"] else None,
                float(cells["sentiment_std"]) if cells["sentiment_std"] else None,
                int(cells["sentiment_matched"]) if cells["sentiment_matched"] else None,
                cells["error"] or None,
            )
        )
    return out


def _emit_json(reports: Sequence[ControversyReport], th: _Thresholds) -> str:
    rows = []
    for r in reports:
        high, large, low_senti = _group_flags(r, th)
        rows.append(
            {
                "subtopic": r.subtopic,
                "window": r.window,
                "record_count": r.record_count,
                "node_count": r.node_count,
                "undersized": r.undersized,
                "rwc": None if r.rwc is None else {
                    "p_xx": r.rwc.p_xx, "p_xy": r.rwc.p_xy,
                    "p_yy": r.rwc.p_yy, "p_yx": r.rwc.p_yx,
                    "score": r.rwc.score,
                },
                "sentiment_mean": r.sentiment_mean,
                "sentiment_std": r.sentiment_std,
                "sentiment_matched": r.sentiment_matched,
                "high_controversy": high,
                "large": large,
                "low_sentiment": low_senti,
                "error": r.error,
            }
        )
    return json.dumps(rows, indent=2, ensure_ascii=False) + "\n"


def _emit_markdown(reports: Sequence[ControversyReport], score_thresh: float) -> str:
    """Subtopics-by-windows table: bold above the score cut, dash when unscored."""
    windows: list[str] = []
    subtopics: list[str] = []
    by_cell: dict[tuple[str, str], ControversyReport] = {}
    for r in reports:
        if r.window not in windows:
            windows.append(r.window)
        if r.subtopic not in subtopics:
            subtopics.append(r.subtopic)
        by_cell[(r.subtopic, r.window)] = r
    lines = ["| " + " | ".join(["Subtopic", *windows]) + " |",
             "| --- |" + " --- |" * len(windows)]
    for subtopic in subtopics:
        cells = []
        for window in windows:
            r = by_cell.get((subtopic, window))
            if r is None or r.rwc is None:
                cells.append("-")
            elif r.rwc.score > score_thresh:
                cells.append(f"**{r.rwc.score:.3f}**")
            else:
                cells.append(f"{r.rwc.score:.3f}")
        lines.append("| " + subtopic + " | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def emit_report(
    reports: Sequence[ControversyReport],
    fmt: str = "csv",
    score_thresh: float = 0.3,
    size_thresh: int = 10_000,
    senti_thresh: float = -0.5,
) -> str:
    """Deterministic serialization: csv, json, or a markdown score table.

    csv and json carry the threshold group flags per row; markdown renders
    the subtopics-by-windows score table with bold above the score cut.
    """
    th = _Thresholds(score_thresh, size_thresh, senti_thresh)
    if fmt == "csv":
        return _emit_csv(reports, th)
    if fmt == "json":
        return _emit_json(reports, th)
    if fmt == "markdown":
        return _emit_markdown(reports, score_thresh)
    raise UnsupportedFormat(f"unsupported format: {fmt!r}")


def write_output(path: str, content: str) -> None:
    """Atomic write: temp file in the target directory, then rename over."""
    directory = os.path.dirname(os.path.abspath(path))
    tmp = os.path.join(directory, f".{os.path.basename(path)}.tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(content)
    os.replace(tmp, path)


def has_mc_failures(reports: Sequence[ControversyReport]) -> bool:
    return any(r.error and r.error.startswith("mc-check failed") for r in reports)


def with_overrides(cfg: PipelineConfig, **overrides: object) -> PipelineConfig:
    """Functional update used by the CLI override flags."""
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
