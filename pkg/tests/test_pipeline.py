import dataclasses
import json

import pytest

from granary.manifest import read_manifest_path, record_to_line, write_manifest_path
from granary.mocks import MockServer
from granary.pipeline import (
    DEFAULT_STAGES,
    PipelineConfig,
    PipelineConfigError,
    config_from_obj,
    load_config,
    run_pipeline,
    shard_of,
    validate_config,
)
from granary.records import UtteranceRecord


def raw_record(rid, lang, text, *, corpus="c", fail=False, lid=None, prob=0.95, duration=None, extra=None):
    """An untranscribed input record steering the mock backend via its locator."""
    from urllib.parse import urlencode

    params = [("lid", lid or lang), ("lid_prob", f"{prob}"), ("text", text)]
    if fail:
        params.append(("fail", "1"))
    if duration is None:
        duration = max(1.0, round(len(text) / 15.0, 2))
    return UtteranceRecord(
        id=rid,
        audio_ref=f"m://{rid}.wav?{urlencode(params)}",
        offset_s=0.0,
        duration_s=duration,
        lang_target=lang,
        corpus=corpus,
        extra=extra or {},
    )


DE_TEXT = "und der die das nicht ein eine mit nach bei"


class TestConfigValidation:
    def test_default_config_valid(self):
        assert validate_config(PipelineConfig()) == []

    @pytest.mark.parametrize("stages, fragment", [
        ((), "must not be empty"),
        (("validate", "warp"), "unknown stages"),
        (("validate", "stats", "stats"), "duplicate"),
        (("segment", "validate"), "validate must be the first"),
        (("stats", "validate"), "stats must be the last"),
        (("transcribe", "segment"), "must precede"),
        (("asr_filter", "lid_filter"), "must precede"),
        (("translate", "pnc_restore", "transcribe"), "must precede"),
        (("validate", "ast_filter"), "requires stage 'translate'"),
    ])
    def test_stage_problems(self, stages, fragment):
        problems = validate_config(PipelineConfig(stages=stages))
        assert any(fragment in p for p in problems), problems

    @pytest.mark.parametrize("kw, fragment", [
        ({"shard_count": 0}, "shard_count"),
        ({"worker_count": 0}, "worker_count"),
        ({"max_pending": 0}, "max_pending"),
        ({"error_rate_cap": 1.5}, "error_rate_cap"),
        ({"translate_target": ""}, "translate_target"),
        ({"services": {"asr": "mock"}}, "missing roles"),
        ({"services": {"asr": "mock", "translate": "mock", "qe": "mock", "pnc": "mock", "tts": "mock"}},
         "unknown service roles"),
        ({"services": {"asr": "ftp://x", "translate": "mock", "qe": "mock", "pnc": "mock"}},
         "http(s) URL"),
        ({"service": {"beam": 3}}, "tuning"),
    ])
    def test_value_problems(self, kw, fragment):
        problems = validate_config(PipelineConfig(**kw))
        assert any(fragment in p for p in problems), problems

    def test_pnc_service_may_be_omitted(self):
        cfg = PipelineConfig(services={"asr": "mock", "translate": "mock", "qe": "mock"})
        assert validate_config(cfg) == []

    def test_nested_config_problems_prefixed(self):
        cfg = PipelineConfig(pnc=dataclasses.replace(PipelineConfig().pnc, cer_threshold=-1.0))
        problems = validate_config(cfg)
        assert any(p.startswith("pnc:") for p in problems)

    def test_ensure_valid_raises_with_all_problems(self):
        with pytest.raises(PipelineConfigError) as exc:
            PipelineConfig(stages=("warp",), shard_count=0).ensure_valid()
        assert len(exc.value.problems) >= 2


class TestConfigLoading:
    def test_obj_round_trip_with_nested_sections(self):
        cfg = config_from_obj({
            "stages": ["validate", "transcribe", "lid_filter", "stats"],
            "shard_count": 4,
            "seed": 9,
            "asr_filter": {"min_lid_prob": 0.7, "default_char_rate_bounds": [2.0, 25.0]},
            "segmentation": {"max_segment_s": 30.0},
            "ast_filter": {"qe_threshold": 0.6},
            "pnc": {"cer_threshold": 0.1},
        })
        assert cfg.stages == ("validate", "transcribe", "lid_filter", "stats")
        assert cfg.shard_count == 4
        assert cfg.asr_filter.min_lid_prob == 0.7
        assert cfg.asr_filter.default_char_rate_bounds == (2.0, 25.0)
        assert cfg.segmentation.max_segment_s == 30.0

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(PipelineConfigError, match="unknown"):
            config_from_obj({"stagez": ["validate"]})

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(PipelineConfigError, match="unknown"):
            config_from_obj({"asr_filter": {"min_lid_probz": 0.7}})

    def test_loaded_values_checked_by_validate(self):
        # Loading checks structure; value range problems surface via validate.
        cfg = config_from_obj({"shard_count": 0})
        assert any("shard_count" in p for p in validate_config(cfg))

    def test_load_config_yaml(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("seed: 5\nworker_count: 2\n", encoding="utf-8")
        cfg = load_config(path)
        assert cfg.seed == 5 and cfg.worker_count == 2

    def test_load_config_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("", encoding="utf-8")
        assert load_config(path) == PipelineConfig()

    def test_load_config_missing_file(self, tmp_path):
        with pytest.raises(PipelineConfigError, match="config"):
            load_config(tmp_path / "absent.yaml")


class TestSharding:
    def test_single_shard_always_zero(self):
        assert shard_of("anything", 1) == 0

    def test_stable_and_in_range(self):
        ids = [f"rec-{i}" for i in range(200)]
        shards = [shard_of(i, 8) for i in ids]
        assert shards == [shard_of(i, 8) for i in ids]
        assert set(shards) <= set(range(8))
        assert len(set(shards)) > 1


class TestRunPipeline:
    def run(self, records, tmp_path, config=None, lines=None):
        inp = tmp_path / "in.jsonl"
        if lines is None:
            write_manifest_path(records, inp)
        else:
            inp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        outp, side = tmp_path / "out.jsonl", tmp_path / "side.jsonl"
        result = run_pipeline(config or PipelineConfig(error_rate_cap=1.0), inp, outp, sidecar_path=side)
        return result, outp, side

    def test_clean_record_kept_and_enriched(self, tmp_path):
        result, outp, _ = self.run([raw_record("a", "de", DE_TEXT)], tmp_path)
        assert result.kept == 1 and result.dropped == 0
        record = next(read_manifest_path(outp))
        assert record.text == DE_TEXT
        assert record.lid_pred == "de"
        assert record.lid_prob == 0.95
        assert record.segment_lids is not None
        assert record.text_restored is not None and record.text_restored.endswith(".")
        assert "translation" in record.extra
        assert record.extra["translation"]["lang"] == "en"
        assert "spans" in record.extra

    def test_english_record_skips_translation(self, tmp_path):
        en_text = "the and of to in that it is was for"
        result, outp, _ = self.run([raw_record("a", "en", en_text)], tmp_path)
        assert result.kept == 1
        record = next(read_manifest_path(outp))
        assert "translation" not in record.extra

    def test_lid_mismatch_dropped_at_lid_stage(self, tmp_path):
        result, _, side = self.run([raw_record("a", "de", DE_TEXT, lid="fr")], tmp_path)
        assert result.dropped == 1
        obj = json.loads(side.read_text().strip())
        assert obj["flags"] == ["lid_mismatch"]

    def test_service_failure_flagged_with_cause(self, tmp_path):
        result, _, side = self.run([raw_record("a", "de", DE_TEXT, fail=True)], tmp_path)
        assert result.service_errors == 1
        obj = json.loads(side.read_text().strip())
        assert obj["flags"] == ["service_error"]
        assert obj["drop_cause"].startswith("transcribe:")

    def test_invalid_record_dropped_by_validate(self, tmp_path):
        bad = raw_record("a", "xx", DE_TEXT)
        result, _, side = self.run([bad], tmp_path)
        assert result.dropped == 1
        obj = json.loads(side.read_text().strip())
        assert obj["flags"] == ["invalid_record"]
        assert "lang_target" in obj["drop_cause"]

    def test_parse_error_routed_to_sidecar_in_position(self, tmp_path):
        lines = [
            record_to_line(raw_record("a", "de", DE_TEXT)),
            "{broken",
            record_to_line(raw_record("b", "de", DE_TEXT)),
        ]
        result, outp, side = self.run(None, tmp_path, lines=lines)
        assert result.total == 3
        assert result.parse_errors == 1
        side_objs = [json.loads(l) for l in side.read_text().splitlines()]
        assert side_objs[0]["flags"] == ["parse_error"]
        assert side_objs[0]["line"] == 2
        kept = [r.id for r in read_manifest_path(outp)]
        assert kept == ["a", "b"]

    def test_conservation_and_order(self, tmp_path):
        records = [raw_record(f"r{i:03d}", "de", DE_TEXT, fail=(i % 5 == 0)) for i in range(40)]
        result, outp, side = self.run(records, tmp_path)
        out_ids = [r.id for r in read_manifest_path(outp)]
        side_ids = [json.loads(l)["id"] for l in side.read_text().splitlines()]
        assert result.total == 40
        assert len(out_ids) + len(side_ids) == 40
        assert out_ids == sorted(out_ids)
        assert side_ids == sorted(side_ids)

    def test_worker_threads_keep_order_and_bytes(self, tmp_path):
        records = [raw_record(f"r{i:03d}", "de", DE_TEXT, fail=(i % 7 == 0)) for i in range(60)]
        _, out1, side1 = self.run(records, tmp_path)
        (tmp_path / "w").mkdir()
        cfg = PipelineConfig(worker_count=4, max_pending=8, error_rate_cap=1.0)
        _, out2, side2 = self.run(records, tmp_path / "w", config=cfg)
        assert out1.read_bytes() == out2.read_bytes()
        assert side1.read_bytes() == side2.read_bytes()

    def test_oversize_span_info_flag_kept(self, tmp_path):
        record = raw_record("a", "de", DE_TEXT, duration=90.0,
                            extra={"spans": [{"start": 0.0, "end": 85.0}]})
        # Long span at a believable char rate for the directive text.
        record = dataclasses.replace(record, duration_s=90.0)
        cfg = PipelineConfig(stages=("validate", "segment", "stats"))
        inp, outp = tmp_path / "in.jsonl", tmp_path / "out.jsonl"
        write_manifest_path([record], inp)
        result = run_pipeline(cfg, inp, outp)
        assert result.kept == 1
        kept = next(read_manifest_path(outp))
        assert "oversize_span" in kept.flags
        assert kept.extra["spans"][0]["flags"] == ["oversize_span"]

    def test_filter_only_chain_on_transcribed_manifest(self, tmp_path):
        records = [
            UtteranceRecord(id="good", audio_ref="a.wav", offset_s=0.0, duration_s=2.0,
                            text="und der die das", lang_target="de", lid_pred="de", lid_prob=0.9),
            UtteranceRecord(id="bad", audio_ref="b.wav", offset_s=0.0, duration_s=2.0,
                            text="und der die das", lang_target="de", lid_pred="en", lid_prob=0.9),
        ]
        cfg = PipelineConfig(stages=("validate", "lid_filter", "asr_filter", "stats"))
        result, outp, _ = self.run(records, tmp_path, config=cfg)
        assert result.kept == 1
        assert next(read_manifest_path(outp)).id == "good"

    def test_error_cap_exceeded_flagged(self, tmp_path):
        records = [raw_record("a", "de", DE_TEXT, fail=True), raw_record("b", "de", DE_TEXT)]
        inp, outp = tmp_path / "in.jsonl", tmp_path / "out.jsonl"
        write_manifest_path(records, inp)
        result = run_pipeline(PipelineConfig(error_rate_cap=0.25), inp, outp)
        assert result.exceeded_error_cap
        under = run_pipeline(PipelineConfig(error_rate_cap=0.5), inp, outp)
        assert not under.exceeded_error_cap

    def test_stats_match_files(self, tmp_path):
        records = [raw_record(f"r{i}", "de", DE_TEXT, fail=(i == 0), corpus="yodas") for i in range(10)]
        result, outp, side = self.run(records, tmp_path)
        key = result.stats.per_key[("yodas", "de")]
        assert key.unfiltered_count == 10
        assert key.filtered_count == result.kept
        assert result.stats.flag_counts["service_error"] == 1

    def test_env_service_override_reaches_http(self, tmp_path):
        records = [raw_record(f"r{i}", "de", DE_TEXT) for i in range(5)]
        inp = tmp_path / "in.jsonl"
        write_manifest_path(records, inp)
        out_mock, out_env = tmp_path / "mock.out", tmp_path / "env.out"
        cfg = PipelineConfig(error_rate_cap=1.0, service={"backoff_base_s": 0.0})
        run_pipeline(cfg, inp, out_mock)
        with MockServer(seed=0) as server:
            environ = {"GRANARY_SERVICES": f"asr={server.base_url},translate={server.base_url}"}
            run_pipeline(cfg, inp, out_env, environ=environ)
        assert out_mock.read_bytes() == out_env.read_bytes()

    def test_invalid_config_raises_before_io(self, tmp_path):
        with pytest.raises(PipelineConfigError):
            run_pipeline(PipelineConfig(shard_count=0), tmp_path / "in.jsonl", tmp_path / "out.jsonl")

    def test_default_stage_chain_constant(self):
        assert DEFAULT_STAGES == (
            "validate", "segment", "transcribe", "lid_filter", "asr_filter",
            "pnc_restore", "translate", "ast_filter", "stats",
        )
