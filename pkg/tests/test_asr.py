import io
import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.io import wavfile

from corpus_forge.asr import (
    AsrAdapter,
    EngineError,
    HttpEngine,
    MockEngine,
    SubprocessEngine,
    TranscriptionFailed,
    post_filter,
)
from corpus_forge.audio import AudioClip


def clip(seed=0, seconds=1.0, rate=44100):
    rng = np.random.default_rng(seed)
    return AudioClip(rng.uniform(-0.3, 0.3, int(seconds * rate)), rate)


class TestPostFilter:
    def test_examples(self):
        assert post_filter("Der Hund!") == "der hund"
        assert post_filter("") == ""
        assert post_filter("  Über  die   Straße, 12 Mal ") == "über die straße mal"
        assert post_filter("café naïve") == "caf nave"

    @given(st.text(max_size=60))
    def test_idempotent_and_alphabet(self, text):
        once = post_filter(text)
        assert post_filter(once) == once
        assert all(ch in "abcdefghijklmnopqrstuvwxyzäöüß " for ch in once)
        assert "  " not in once and once == once.strip()


class TestAdapter:
    def test_mock(self):
        adapter = AsrAdapter(MockEngine({"a": "Der Hund!"}))
        t = adapter.transcribe(clip(), "a")
        assert (t.snippet_id, t.text, t.engine_tag) == ("a", "der hund", "mock-1")

    def test_empty_kept(self):
        t = AsrAdapter(MockEngine({"a": ""})).transcribe(clip(), "a")
        assert t.text == ""

    def test_cache_hit(self, tmp_path):
        engine = MockEngine({"a": "eins zwei"})
        adapter = AsrAdapter(engine, tmp_path)
        first = adapter.transcribe(clip(), "a")
        again = AsrAdapter(engine, tmp_path).transcribe(clip(), "a")
        assert first == again and engine.calls == ["a"]

    def test_cache_keyed_by_content_and_tag(self, tmp_path):
        engine = MockEngine({"a": "eins"})
        AsrAdapter(engine, tmp_path).transcribe(clip(0), "a")
        AsrAdapter(engine, tmp_path).transcribe(clip(1), "a")
        other = MockEngine({"a": "eins"}, tag="mock-2")
        AsrAdapter(other, tmp_path).transcribe(clip(0), "a")
        assert engine.calls == ["a", "a"] and other.calls == ["a"]
        assert not list(tmp_path.glob("*.tmp"))

    def test_empty_transcript_cached(self, tmp_path):
        engine = MockEngine({"a": ""})
        AsrAdapter(engine, tmp_path).transcribe(clip(), "a")
        assert AsrAdapter(engine, tmp_path).transcribe(clip(), "a").text == ""
        assert engine.calls == ["a"]

    def test_retry(self):
        engine = MockEngine({"a": "ja"}, failures={"a": 2})
        assert AsrAdapter(engine, retries=2).transcribe(clip(), "a").text == "ja"
        assert engine.calls == ["a", "a", "a"]

    def test_persistent_failure(self):
        engine = MockEngine({"a": "ja"}, failures={"a": 5})
        with pytest.raises(TranscriptionFailed) as info:
            AsrAdapter(engine, retries=2).transcribe(clip(), "a")
        assert info.value.snippet_id == "a"

    def test_many(self):
        engine = MockEngine({"a": "eins", "b": "zwei", "c": "drei"}, failures={"b": 9})
        items = [(sid, clip(i)) for i, sid in enumerate("abc")]
        done, failed = AsrAdapter(engine, retries=1, max_in_flight=3).transcribe_many(items)
        assert [t.snippet_id for t in done] == ["a", "c"]
        assert failed == ["b"]

    def test_engine_gets_16k(self):
        seen = {}

        class Probe(MockEngine):
            def recognize(self, wav, snippet_id):
                rate, data = wavfile.read(io.BytesIO(wav))
                seen.update(rate=rate, n=len(data), dtype=data.dtype)
                return "ok"

        AsrAdapter(Probe({})).transcribe(clip(seconds=2.0), "a")
        assert seen == {"rate": 16000, "n": 32000, "dtype": np.dtype("int16")}


class TestSubprocessEngine:
    def test_roundtrip(self, tmp_path):
        script = tmp_path / "engine.py"
        script.write_text(
            "import sys\nfrom scipy.io import wavfile\n"
            "rate, data = wavfile.read(sys.argv[1])\n"
            "print(f'Rate {rate} Hz, OK!')\n", encoding="utf-8")
        engine = SubprocessEngine([sys.executable, str(script)], "sub-1")
        assert AsrAdapter(engine).transcribe(clip(), "a").text == "rate hz ok"

    def test_failure(self, tmp_path):
        script = tmp_path / "bad.py"
        script.write_text("import sys\nsys.exit(3)\n", encoding="utf-8")
        engine = SubprocessEngine(f"{sys.executable} {script}", "sub-1")
        with pytest.raises(EngineError):
            engine.recognize(b"RIFF", "a")
        with pytest.raises(TranscriptionFailed):
            AsrAdapter(engine, retries=1).transcribe(clip(), "a")

    def test_missing_binary(self):
        with pytest.raises(EngineError):
            SubprocessEngine(["/nonexistent/engine"], "x").recognize(b"", "a")


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):
        body = self.rfile.read(int(self.headers["Content-Length"]))
        rate, data = wavfile.read(io.BytesIO(body))
        if self.headers.get("X-Snippet-Id") == "broken":
            self.send_response(500)
            self.end_headers()
            return
        payload = f"Länge {len(data)} bei {rate}".encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    srv = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_port}/asr"
    srv.shutdown()


class TestHttpEngine:
    def test_roundtrip(self, server):
        engine = HttpEngine(server, "http-1")
        assert AsrAdapter(engine).transcribe(clip(), "a").text == "länge bei"

    def test_error_status(self, server):
        with pytest.raises(TranscriptionFailed):
            AsrAdapter(HttpEngine(server, "http-1"), retries=0).transcribe(clip(), "broken")

    def test_unreachable(self):
        with pytest.raises(EngineError):
            HttpEngine("http://127.0.0.1:9/none", "h", timeout=2).recognize(b"", "a")


def test_mock_from_file(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"x": "Hallo Welt"}), encoding="utf-8")
    assert AsrAdapter(MockEngine.from_file(path)).transcribe(clip(), "x").text == "hallo welt"
