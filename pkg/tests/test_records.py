import pytest

from granary.records import (
    DROP_FLAGS,
    INFO_FLAGS,
    FilterDecision,
    UtteranceRecord,
    decision_from_flags,
    freeze_extra,
)


def make_record(**kwargs) -> UtteranceRecord:
    base = dict(id="r1", audio_ref="a.wav", offset_s=0.0, duration_s=2.0, lang_target="en")
    base.update(kwargs)
    return UtteranceRecord(**base)


class TestUtteranceRecord:
    def test_is_immutable(self):
        record = make_record()
        with pytest.raises(AttributeError):
            record.text = "changed"

    def test_with_flags_accumulates(self):
        record = make_record().with_flags("charset").with_flags("lid_mismatch", "charset")
        assert record.flags == frozenset({"charset", "lid_mismatch"})

    def test_with_flags_no_args_returns_self(self):
        record = make_record()
        assert record.with_flags() is record

    def test_hours(self):
        assert make_record(duration_s=7200.0).hours() == pytest.approx(2.0)

    def test_extra_is_read_only(self):
        record = make_record(extra=freeze_extra({"k": "v"}))
        with pytest.raises(TypeError):
            record.extra["k"] = "other"


class TestFlagTaxonomy:
    def test_drop_and_info_are_disjoint(self):
        assert not DROP_FLAGS & INFO_FLAGS

    def test_expected_drop_flags(self):
        assert "service_error" in DROP_FLAGS
        assert "invalid_record" in DROP_FLAGS
        assert "pnc_reverted" in INFO_FLAGS
        assert "oversize_span" in INFO_FLAGS


class TestFilterDecision:
    def test_drop_requires_drop_class_flag(self):
        with pytest.raises(ValueError):
            FilterDecision(record_id="r", verdict="drop", flags=frozenset({"pnc_reverted"}))

    def test_bad_verdict_rejected(self):
        with pytest.raises(ValueError):
            FilterDecision(record_id="r", verdict="keep")

    def test_decision_from_flags_info_only_passes(self):
        decision = decision_from_flags("r", frozenset({"pnc_reverted"}))
        assert not decision.dropped

    def test_decision_from_flags_drop(self):
        decision = decision_from_flags("r", frozenset({"charset", "pnc_reverted"}))
        assert decision.dropped
        assert decision.flags == frozenset({"charset", "pnc_reverted"})
