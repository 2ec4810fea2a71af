import json
import os
import subprocess
import sys

import pytest

from controversy_scope import cli
from controversy_scope.ingest import TimeWindow
from controversy_scope.pipeline import (
    ConfigError,
    ControversyReport,
    PipelineConfig,
    UnsupportedFormat,
    cell_seed,
    config_from_dict,
    emit_report,
    load_config,
    parse_report_csv,
    run_pipeline,
    write_output,
)
from controversy_scope.rwc import RwcResult
from controversy_scope.synth import CommunitySpec, CorpusSpec, synth_corpus

WINDOW = TimeWindow(1_600_000_000, 1_602_592_000, "2020-09")


def small_corpus(seed=0):
    spec = CorpusSpec(
        communities=(
            CommunitySpec(150, ("vaxx",), 0.5),
            CommunitySpec(150, ("vaxx",), -0.5),
        ),
        cross_repost_rate=0.02,
        background_cross_rate=0.5,
        window=WINDOW,
        seed=seed,
    )
    return synth_corpus(spec)


def small_config(**overrides):
    defaults = dict(windows=(WINDOW,), min_nodes=150, seed=3)
    defaults.update(overrides)
    return PipelineConfig(**defaults)


def test_empty_corpus_yields_empty_reports():
    assert run_pipeline(small_config(), records=[]) == []


def test_rq1_mode_one_row_per_query_window():
    records = small_corpus(seed=1)
    w2 = TimeWindow(WINDOW.end, WINDOW.end + 86400, "2020-10")
    cfg = small_config(windows=(WINDOW, w2), queries=("vaxx", "ghost"))
    reports = run_pipeline(cfg, records=records)
    assert [(r.window, r.subtopic) for r in reports] == [
        ("2020-09", "vaxx"), ("2020-09", "ghost"),
        ("2020-10", "vaxx"), ("2020-10", "ghost"),
    ]
    by_key = {(r.window, r.subtopic): r for r in reports}
    assert not by_key[("2020-09", "vaxx")].undersized
    assert by_key[("2020-09", "ghost")].undersized
    assert by_key[("2020-09", "ghost")].node_count == 0
    assert by_key[("2020-10", "vaxx")].undersized  # empty window
    assert all(r.rwc is None for r in reports if r.undersized)


def test_phase1_discovers_planted_token_and_matches_rq1_score():
    records = small_corpus(seed=2)
    phase1 = run_pipeline(small_config(top_n=10), records=records)
    tokens = [r.subtopic for r in phase1]
    assert "vaxx" in tokens and "covid" in tokens
    rq1 = run_pipeline(small_config(queries=("vaxx",)), records=records)
    phase1_vaxx = next(r for r in phase1 if r.subtopic == "vaxx")
    assert rq1[0].rwc == phase1_vaxx.rwc
    assert rq1[0].record_count == phase1_vaxx.record_count


def test_pipeline_deterministic_and_worker_invariant():
    records = small_corpus(seed=3)
    cfg = small_config(top_n=5)
    first = run_pipeline(cfg, records=records)
    second = run_pipeline(cfg, records=records)
    assert emit_report(first, "json") == emit_report(second, "json")
    parallel = run_pipeline(small_config(top_n=5, workers=4), records=records)
    assert emit_report(parallel, "json") == emit_report(first, "json")


def test_sentiment_attached_when_lexicon_given(tmp_path):
    lex = tmp_path / "lex.tsv"
    lex.write_text("good\t1.0\nbad\t-1.0\n", encoding="utf-8")
    records = small_corpus(seed=4)
    cfg = small_config(queries=("vaxx",), lexicon_path=str(lex))
    report = run_pipeline(cfg, records=records)[0]
    assert report.sentiment_mean is not None
    assert report.sentiment_std is not None
    assert report.sentiment_matched > 0
    # two opposed camps: mean near zero, spread near one
    assert abs(report.sentiment_mean) < 0.3
    assert report.sentiment_std > 0.7


def test_cell_seed_stable():
    assert cell_seed(1, "2020-09", "vaxx") == cell_seed(1, "2020-09", "vaxx")
    assert cell_seed(1, "2020-09", "vaxx") != cell_seed(2, "2020-09", "vaxx")
    assert cell_seed(1, "2020-09", "vaxx") != cell_seed(1, "2020-09", "covid")


def _fixture_reports():
    def row(subtopic, window, score, nodes=1000):
        rwc = None
        undersized = score is None
        if score is not None:
            t = (1.0 + score) / 2.0
            rwc = RwcResult(t, 1.0 - t, t, 1.0 - t, score)
        return ControversyReport(
            subtopic, window, record_count=5 * nodes,
            node_count=nodes if score is not None else 12,
            undersized=undersized, rwc=rwc,
            sentiment_mean=-0.25, sentiment_std=0.4, sentiment_matched=321,
        )

    return [
        row("alpha", "w1", 0.84), row("alpha", "w2", None),
        row("beta", "w1", 0.12), row("beta", "w2", -0.31),
    ]


def test_csv_round_trip_identity():
    reports = _fixture_reports()
    text = emit_report(reports, "csv")
    assert parse_report_csv(text) == reports


def test_json_output_shape():
    rows = json.loads(emit_report(_fixture_reports(), "json"))
    assert [r["subtopic"] for r in rows] == ["alpha", "alpha", "beta", "beta"]
    assert rows[0]["rwc"]["score"] == 0.84
    assert rows[1]["rwc"] is None and rows[1]["undersized"] is True


def test_markdown_bold_and_dash_cells():
    text = emit_report(_fixture_reports(), "markdown")
    lines = text.splitlines()
    assert lines[0] == "| Subtopic | w1 | w2 |"
    assert lines[2] == "| alpha | **0.840** | - |"
    assert lines[3] == "| beta | 0.120 | -0.310 |"


def test_markdown_empty_reports_header_only():
    text = emit_report([], "markdown")
    assert text.splitlines()[0] == "| Subtopic |"
    assert len(text.splitlines()) == 2


def test_unsupported_format_raises():
    with pytest.raises(UnsupportedFormat):
        emit_report([], "xml")


def test_config_from_dict_full_round():
    raw = {
        "input": "corpus.jsonl",
        "windows": ["2020-02", "100..200"],
        "queries": ["vaccine"],
        "top_n": 10,
        "min_rt": 3,
        "k_core": 4,
        "min_nodes": 500,
        "balance_eps": 0.03,
        "rwc": {"k_top": 5, "restart_prob": 0.2},
        "score_thresh": 0.4,
        "seed": 7,
        "tz": "Asia/Tokyo",
        "format": "json",
    }
    cfg = config_from_dict(raw)
    assert cfg.input_path == "corpus.jsonl"
    assert cfg.windows[0].label == "2020-02"
    assert cfg.windows[1].start == 100
    assert cfg.queries == ("vaccine",)
    assert cfg.min_rt == 3 and cfg.k_core_k == 4 and cfg.min_nodes == 500
    assert cfg.rwc.k_top == 5 and cfg.rwc.restart_prob == 0.2
    assert cfg.output_format == "json"


def test_config_rejects_unknown_keys_and_bad_values():
    with pytest.raises(ConfigError):
        config_from_dict({"windows": ["2020-02"], "typo_key": 1})
    with pytest.raises(ConfigError):
        config_from_dict({})
    with pytest.raises(ConfigError):
        PipelineConfig(windows=())
    with pytest.raises(ConfigError):
        load_config("/nonexistent/config.json")


def test_run_pipeline_checks_referenced_files(tmp_path):
    cfg = small_config(input_path=str(tmp_path / "missing.jsonl"))
    with pytest.raises(ConfigError):
        run_pipeline(cfg)


def test_write_output_atomic(tmp_path):
    target = tmp_path / "report.csv"
    write_output(str(target), "hello\n")
    assert target.read_text() == "hello\n"
    write_output(str(target), "replaced\n")
    assert target.read_text() == "replaced\n"
    assert list(tmp_path.iterdir()) == [target]


# --- CLI ----------------------------------------------------------------------


def test_cli_synth_then_rq1_csv(tmp_path):
    spec = {
        "kind": "corpus",
        "communities": [
            {"n_authors": 150, "topic_tokens": ["vaxx"], "polarity_bias": 0.5},
            {"n_authors": 150, "topic_tokens": ["vaxx"], "polarity_bias": -0.5},
        ],
        "cross_repost_rate": 0.02,
        "background_cross_rate": 0.5,
        "window": "2020-09",
        "seed": 12,
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec), encoding="utf-8")
    corpus_path = tmp_path / "corpus.jsonl"
    assert cli.main(["synth", "--spec", str(spec_path), "--out", str(corpus_path)]) == 0
    assert corpus_path.exists()

    report_path = tmp_path / "report.csv"
    code = cli.main([
        "rq1", "--queries", "vaxx,ghost",
        "--input", str(corpus_path),
        "--window", "2020-09",
        "--min-nodes", "150",
        "--seed", "3",
        "--format", "csv",
        "--output", str(report_path),
    ])
    assert code == 0
    reports = parse_report_csv(report_path.read_text())
    by_topic = {r.subtopic: r for r in reports}
    assert by_topic["vaxx"].rwc is not None
    assert by_topic["vaxx"].rwc.score > 0.3
    assert by_topic["ghost"].undersized


def test_cli_run_with_config_markdown_stdout(tmp_path, capsys):
    corpus = synth_corpus(
        CorpusSpec(
            communities=(CommunitySpec(150, ("vaxx",), 0.0),
                         CommunitySpec(150, ("vaxx",), 0.0)),
            cross_repost_rate=0.02,
            background_cross_rate=0.5,
            window=WINDOW,
            seed=13,
        )
    )
    corpus_path = tmp_path / "c.jsonl"
    from controversy_scope.ingest import serialize_records
    corpus_path.write_text(serialize_records(corpus), encoding="utf-8")
    cfg = {
        "input": str(corpus_path),
        "windows": ["2020-09"],
        "queries": ["vaxx"],
        "min_nodes": 150,
        "seed": 3,
        "format": "markdown",
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
    assert cli.main(["run", "--config", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("| Subtopic | 2020-09 |")
    assert "vaxx" in out


def test_cli_synth_planted(tmp_path):
    spec_path = tmp_path / "p.json"
    spec_path.write_text(json.dumps(
        {"kind": "planted", "n_per_side": 20, "p_in": 1.0, "p_out": 0.0, "seed": 1}
    ), encoding="utf-8")
    out = tmp_path / "graph.txt"
    assert cli.main(["synth", "--spec", str(spec_path), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2 * (20 * 19 // 2) + 1
    sides = (tmp_path / "graph.txt.sides").read_text().splitlines()
    assert len(sides) == 40


def test_cli_requires_window_without_config():
    assert cli.main(["rq1", "--queries", "a", "--input", "x.jsonl"]) == 2


def test_cli_console_script_help():
    result = subprocess.run(
        [sys.executable, "-m", "controversy_scope.cli", "--help"],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    assert "controversy-scope" in result.stdout


def test_phase1_global_scope_shares_shortlist_across_windows():
    records = list(small_corpus(seed=14))
    # a token that only occurs in a second window
    w2 = TimeWindow(WINDOW.end, WINDOW.end + 86400 * 30, "2020-10")
    from conftest import record as make_record
    records.append(make_record("extra1", "zz1", ts=WINDOW.end + 10,
                               tokens=(("lockdown", "NOUN"),) * 3))
    per_window = run_pipeline(
        small_config(windows=(WINDOW, w2), top_n=3), records=records)
    global_scope = run_pipeline(
        small_config(windows=(WINDOW, w2), top_n=3, phase1_scope="global"),
        records=records)
    # global mode scores one shared shortlist in every window
    global_tokens = {r.subtopic for r in global_scope if r.window == "2020-09"}
    assert global_tokens == {r.subtopic for r in global_scope if r.window == "2020-10"}
    w1_tokens = {r.subtopic for r in per_window if r.window == "2020-09"}
    w2_tokens = {r.subtopic for r in per_window if r.window == "2020-10"}
    assert "lockdown" in w2_tokens and "lockdown" not in w1_tokens


def test_group_flag_columns_in_csv_and_json():
    reports = [
        ControversyReport("big", "w", 100, 12_000, False,
                          RwcResult(0.85, 0.15, 0.85, 0.15, 0.7),
                          sentiment_mean=-0.8, sentiment_std=0.2,
                          sentiment_matched=50),
        ControversyReport("small", "w", 100, 900, False,
                          RwcResult(0.55, 0.45, 0.55, 0.45, 0.1),
                          sentiment_mean=0.4, sentiment_std=0.3,
                          sentiment_matched=40),
        ControversyReport("dash", "w", 5, 10, True, None),
    ]
    rows = json.loads(emit_report(reports, "json"))
    assert [r["high_controversy"] for r in rows] == [True, False, None]
    assert [r["large"] for r in rows] == [True, False, False]
    assert [r["low_sentiment"] for r in rows] == [True, False, None]
    csv_text = emit_report(reports, "csv")
    header, first, second, third = csv_text.splitlines()
    assert "high_controversy,large,low_sentiment" in header
    assert first.split(",")[13:16] == ["1", "1", "1"]
    assert second.split(",")[13:16] == ["0", "0", "0"]
    assert third.split(",")[13:16] == ["", "0", ""]
    # derived columns do not disturb the round-trip
    assert parse_report_csv(csv_text) == reports


def test_cell_error_recorded_not_raised():
    # k_top larger than a side: the cell fails, the batch completes
    records = small_corpus(seed=15)
    from controversy_scope.rwc import RwcConfig
    cfg = small_config(queries=("vaxx",), rwc=RwcConfig(k_top=200))
    report = run_pipeline(cfg, records=records)[0]
    assert report.rwc is None and not report.undersized
    assert report.error and "SideTooSmall" in report.error


def test_mc_check_agreement_and_forced_failure():
    from controversy_scope.pipeline import has_mc_failures

    records = small_corpus(seed=16)
    ok_cfg = small_config(queries=("vaxx",), mc_check=True, mc_walks=50_000)
    ok = run_pipeline(ok_cfg, records=records)
    assert ok[0].error is None
    assert not has_mc_failures(ok)
    # a handful of walks is far too noisy to stay within the tolerance
    noisy_cfg = small_config(queries=("vaxx",), mc_check=True, mc_walks=8)
    noisy = run_pipeline(noisy_cfg, records=records)
    assert has_mc_failures(noisy)
    assert noisy[0].rwc is not None  # the exact score is still reported


def test_cli_corpus_spec_parses_every_field(tmp_path):
    from controversy_scope.cli import _corpus_spec_from_dict
    from controversy_scope.pipeline import ConfigError as CfgError
    from controversy_scope.ingest import month_window

    raw = {
        "communities": [
            {"n_authors": 10, "topic_tokens": ["vaxx"], "polarity_bias": 0.4},
            {"n_authors": 12},
        ],
        "window": "2020-09",
        "cross_repost_rate": 0.02,
        "background_cross_rate": 0.5,
        "posts_per_author": [5, 9],
        "repost_fraction": 0.7,
        "topic_post_rate": 0.4,
        "n_favorites": 2,
        "background_tokens": ["covid", "news2"],
        "sentiment_surfaces": ["up", "down"],
        "seed": 9,
    }
    spec = _corpus_spec_from_dict(dict(raw))
    assert spec == CorpusSpec(
        communities=(CommunitySpec(10, ("vaxx",), 0.4), CommunitySpec(12, ())),
        window=month_window("2020-09"),
        cross_repost_rate=0.02,
        background_cross_rate=0.5,
        posts_per_author=(5, 9),
        repost_fraction=0.7,
        topic_post_rate=0.4,
        n_favorites=2,
        background_tokens=("covid", "news2"),
        sentiment_surfaces=("up", "down"),
        seed=9,
    )
    with pytest.raises(CfgError):
        _corpus_spec_from_dict({**raw, "typo": 1})


def test_cli_synth_corpus_matches_library(tmp_path):
    spec = {
        "kind": "corpus",
        "communities": [{"n_authors": 40, "topic_tokens": ["vaxx"]},
                        {"n_authors": 40, "topic_tokens": ["vaxx"]}],
        "cross_repost_rate": 0.02,
        "background_cross_rate": 0.5,
        "window": "2020-09",
        "seed": 4,
    }
    spec_path = tmp_path / "s.json"
    spec_path.write_text(json.dumps(spec), encoding="utf-8")
    out = tmp_path / "c.jsonl"
    assert cli.main(["synth", "--spec", str(spec_path), "--out", str(out)]) == 0
    from controversy_scope.ingest import month_window, serialize_records
    expected = synth_corpus(CorpusSpec(
        communities=(CommunitySpec(40, ("vaxx",)), CommunitySpec(40, ("vaxx",))),
        cross_repost_rate=0.02,
        background_cross_rate=0.5,
        window=month_window("2020-09"),
        seed=4,
    ))
    assert out.read_text() == serialize_records(expected)


def test_dump_graphs_writes_edge_lists(tmp_path):
    records = small_corpus(seed=17)
    dump_dir = tmp_path / "graphs"
    cfg = small_config(queries=("vaxx", "ghost"), dump_graphs_dir=str(dump_dir))
    run_pipeline(cfg, records=records)
    files = sorted(p.name for p in dump_dir.iterdir())
    assert files == ["vaxx_2020-09.edges"]  # undersized cells are not dumped
    lines = (dump_dir / "vaxx_2020-09.edges").read_text().splitlines()
    assert lines
    for line in lines:
        u, v, w = line.split()
        assert u < v and int(w) >= 2
