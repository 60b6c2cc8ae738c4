import pytest
import requests

from granary.clients import HttpServiceClient, ServiceConfig, ServiceError
from granary.mocks import MockBackend, MockServer, MockServiceClient, MockServiceFailure


@pytest.fixture()
def backend():
    return MockBackend(seed=0)


class TestDetectLanguage:
    def test_directed_by_query_params(self, backend):
        assert backend.detect_language("m://a?lid=fr&lid_prob=0.93") == ("fr", 0.93)

    def test_deterministic_without_directives(self, backend):
        first = backend.detect_language("m://a")
        again = MockBackend(seed=0).detect_language("m://a")
        assert first == again
        other_seed = MockBackend(seed=1).detect_language("m://a")
        assert (first != other_seed) or (first[0] == other_seed[0])

    def test_fail_directive_raises(self, backend):
        with pytest.raises(MockServiceFailure):
            backend.detect_language("m://a?fail=1")


class TestTranscribe:
    def test_text_directive_round_trips_exactly(self, backend):
        result = backend.transcribe("m://a?lid=de&text=guten+morgen+liebe+leute", "de", (0.0, 4.0))
        joined = " ".join(s.text for s in result.segments if s.text)
        assert joined == "guten morgen liebe leute"

    def test_segments_partition_window(self, backend):
        result = backend.transcribe("m://a?lid=de&text=eins+zwei+drei+vier&nseg=2", "de", (0.0, 8.0))
        assert len(result.segments) == 2
        assert result.segments[0].start_s == 0.0
        assert result.segments[-1].end_s == 8.0
        assert result.segments[0].end_s == result.segments[1].start_s

    def test_seg_lids_directive(self, backend):
        result = backend.transcribe("m://a?lid=de&text=a+b+c&seg_lids=de,fr&nseg=2", "de", (0.0, 4.0))
        assert [s.lid for s in result.segments] == ["de", "fr"]

    def test_default_segment_lid_follows_hint(self, backend):
        result = backend.transcribe("m://a?text=hello+there", "en", (0.0, 2.0))
        assert all(s.lid == "en" for s in result.segments)


class TestTranslate:
    def test_deterministic_word_mapping(self, backend):
        out1 = backend.translate("guten morgen", "de", "en")
        out2 = MockBackend(seed=0).translate("guten morgen", "de", "en")
        assert out1 == out2
        assert out1[0].isupper() and out1.endswith(".")

    def test_ratio_marker_inflates_length(self, backend):
        out = backend.translate("kurz xxratio text", "de", "en")
        assert len(out.split()) >= 60

    def test_lidoff_marker_emits_french_words(self, backend):
        out = backend.translate("hallo xxlidoff welt", "de", "en")
        assert set(out.rstrip(".").lower().split()) <= {
            "le", "la", "les", "des", "une", "dans", "pour", "avec", "sur", "est",
        }

    def test_badscript_marker_emits_cyrillic(self, backend):
        out = backend.translate("hallo xxbadscript welt", "de", "en")
        assert any("\u0400" <= ch <= "\u04ff" for ch in out)

    def test_svcfail_marker_raises(self, backend):
        with pytest.raises(MockServiceFailure):
            backend.translate("hallo xxsvcfail welt", "de", "en")


class TestQeScore:
    def test_identical_pair_scores_high(self, backend):
        assert backend.qe_score("same", "same", "de", "en") == 0.9

    def test_scores_inside_unit_interval(self, backend):
        score = backend.qe_score("guten morgen", "good morning", "de", "en")
        assert 0.8 <= score <= 0.99

    def test_qelow_marker(self, backend):
        assert backend.qe_score("x xxqelow y", "ok", "de", "en") == 0.1


class TestRestorePnc:
    def test_capitalizes_and_terminates(self, backend):
        assert backend.restore_pnc("guten morgen", "de") == "Guten morgen."

    def test_existing_terminal_punctuation_kept(self, backend):
        assert backend.restore_pnc("guten morgen!", "de") == "Guten morgen!"

    def test_drift_marker_rewrites_words(self, backend):
        original = "eins zwei drei vier fuenf sechs"
        restored = backend.restore_pnc(original + " pncdrift", "de")
        assert restored != original
        kept = sum(1 for a, b in zip(original.split(), restored.split()) if a == b)
        assert kept < len(original.split())

    def test_badchar_marker_appends_forbidden_char(self, backend):
        assert "中" in backend.restore_pnc("hallo pncbadchar", "de")

    def test_fail_marker_raises(self, backend):
        with pytest.raises(MockServiceFailure):
            backend.restore_pnc("hallo pncfail", "de")


class TestMockServiceClient:
    def test_failures_become_service_errors(self, backend):
        client = MockServiceClient(backend)
        with pytest.raises(ServiceError) as exc:
            client.detect_language("m://a?fail=1")
        assert exc.value.attempts == 1

    def test_parity_with_backend(self, backend):
        client = MockServiceClient(MockBackend(seed=0))
        assert client.detect_language("m://a?lid=sv&lid_prob=0.88") == ("sv", 0.88)
        assert client.translate("hej", "sv", "en") == backend.translate("hej", "sv", "en")
        assert client.restore_pnc("hej du", "sv") == backend.restore_pnc("hej du", "sv")


class TestMockServer:
    def test_http_round_trip_matches_in_process(self):
        backend = MockBackend(seed=3)
        with MockServer(seed=3) as server:
            client = HttpServiceClient(ServiceConfig(base_url=server.base_url, backoff_base_s=0.0))
            assert client.detect_language("m://a?lid=pl&lid_prob=0.91") == ("pl", 0.91)
            result = client.transcribe("m://a?lid=pl&text=czy+to+jest", "pl", (0.0, 3.0))
            expected = backend.transcribe("m://a?lid=pl&text=czy+to+jest", "pl", (0.0, 3.0))
            assert [s.text for s in result.segments] == [s.text for s in expected.segments]
            assert client.translate("czy to", "pl", "en") == backend.translate("czy to", "pl", "en")
            assert client.qe_score("a", "b", "pl", "en") == backend.qe_score("a", "b", "pl", "en")
            assert client.restore_pnc("czy to", "pl") == backend.restore_pnc("czy to", "pl")

    def test_configured_failure_returns_503(self):
        with MockServer() as server:
            client = HttpServiceClient(
                ServiceConfig(base_url=server.base_url, max_retries=1, backoff_base_s=0.0)
            )
            with pytest.raises(ServiceError) as exc:
                client.detect_language("m://a?fail=1")
            assert exc.value.status == 503
            assert exc.value.attempts == 2

    def test_missing_field_returns_400_without_retry(self):
        with MockServer() as server:
            resp = requests.post(server.base_url + "/v1/detect_language", json={}, timeout=5)
            assert resp.status_code == 400
            resp = requests.post(
                server.base_url + "/v1/translate", data=b"not json",
                headers={"Content-Type": "application/json"}, timeout=5,
            )
            assert resp.status_code == 400

    def test_unknown_path_returns_404(self):
        with MockServer() as server:
            resp = requests.post(server.base_url + "/v1/nope", json={}, timeout=5)
            assert resp.status_code == 404

    def test_ephemeral_port_allocated(self):
        with MockServer() as server:
            assert server.base_url.startswith("http://127.0.0.1:")
            assert not server.base_url.endswith(":0")
