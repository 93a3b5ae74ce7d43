import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from ideaforge.backends import (
    DEFAULT_CREDENTIAL_ENV,
    BackendDescriptor,
    BackendError,
    CompletionRequest,
    LocalBackend,
    RemoteBackend,
    TopKDroppedWarning,
    complete,
    map_params_remote,
)
from ideaforge.decoder import DecodingParams
from ideaforge.reference_lm import save, train
from ideaforge.textkit import BOS_ID, EOS_ID, build_vocab, encode, tokenize

SECRET = "sk-test-secret-0451"


class QuietServer(ThreadingHTTPServer):
    def handle_error(self, request, client_address):
        pass  # clients time out on purpose in these tests


class MockServer:
    """Scripted completion endpoint; one script entry per expected request."""

    def __init__(self):
        self.requests = []
        self.script = []
        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                n = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(n)
                index = len(server.requests)
                server.requests.append(
                    {
                        "path": self.path,
                        "headers": {k.lower(): v for k, v in self.headers.items()},
                        "body": json.loads(raw.decode("utf-8")),
                    }
                )
                entry = server.script[min(index, len(server.script) - 1)]
                if entry[0] == "sleep":
                    time.sleep(entry[1])
                    entry = entry[2]
                kind, status, payload = entry
                data = payload if kind == "raw" else json.dumps(payload).encode("utf-8")
                try:
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(data)))
                    self.end_headers()
                    self.wfile.write(data)
                except (BrokenPipeError, ConnectionResetError):
                    pass

            def log_message(self, *args):
                pass

        self.httpd = QuietServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_address[1]}"
        threading.Thread(target=self.httpd.serve_forever, daemon=True).start()

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


def ok_payload(texts, finish="stop"):
    return {
        "id": "cmpl-1",
        "object": "text_completion",
        "choices": [
            {"index": i, "text": t, "finish_reason": finish} for i, t in enumerate(texts)
        ],
    }


@pytest.fixture
def server():
    s = MockServer()
    yield s
    s.close()


@pytest.fixture
def remote_descriptor(server):
    return BackendDescriptor(
        kind="remote",
        base_url=server.url,
        model="concept-model-v1",
        timeout=5.0,
        backoff_base=0.001,
    )


@pytest.fixture
def credential(monkeypatch):
    monkeypatch.setenv(DEFAULT_CREDENTIAL_ENV, SECRET)
    return SECRET


@pytest.fixture(scope="module")
def local_backend():
    token_lists = [
        tokenize("a solar lantern that floats"),
        tokenize("a folding drone for rescue work"),
        tokenize("a modular desk that routes cables"),
    ]
    vocab = build_vocab(token_lists)
    seqs = [[BOS_ID] + encode(vocab, t) + [EOS_ID] for t in token_lists]
    model, _ = train(seqs, vocab, order=2)
    return LocalBackend(model)


class TestMapParamsRemote:
    def test_analogy_run_params(self):
        params = DecodingParams(
            temperature=0.85, top_p=1.0, presence_penalty=0.5, frequency_penalty=0.5,
            max_tokens=150, stop=["\nApplying "], seed=7, n_candidates=4,
        )
        body = map_params_remote(params, prompt="Applying lantern to drone:\n")
        assert body == {
            "prompt": "Applying lantern to drone:\n",
            "max_tokens": 150,
            "temperature": 0.85,
            "top_p": 1.0,
            "presence_penalty": 0.5,
            "frequency_penalty": 0.5,
            "stop": ["\nApplying "],
            "n": 4,
        }

    def test_defaults_all_fields_present_stop_omitted(self):
        body = map_params_remote(DecodingParams(), prompt="p")
        assert set(body) == {
            "prompt", "max_tokens", "temperature", "top_p",
            "presence_penalty", "frequency_penalty", "n",
        }
        assert body["max_tokens"] == 256 and body["n"] == 1

    def test_top_k_rejected_without_override(self):
        params = DecodingParams(temperature=0.85, top_k=40)
        with pytest.raises(ValueError, match="top_k"):
            map_params_remote(params)

    def test_top_k_dropped_with_override_and_warning(self):
        params = DecodingParams(top_k=40)
        with pytest.warns(TopKDroppedWarning):
            body = map_params_remote(params, drop_top_k=True)
        assert "top_k" not in body

    def test_no_prompt_key_when_absent(self):
        assert "prompt" not in map_params_remote(DecodingParams())


class TestDescriptor:
    def test_remote_requires_base_url_and_model(self):
        with pytest.raises(ValueError):
            BackendDescriptor(kind="remote", model="m")
        with pytest.raises(ValueError):
            BackendDescriptor(kind="remote", base_url="http://x")
        with pytest.raises(ValueError):
            BackendDescriptor(kind="remote", base_url="http://x", model="m", credential_env="")

    def test_local_requires_model_path(self):
        with pytest.raises(ValueError):
            BackendDescriptor(kind="local")

    def test_timeout_positive(self):
        with pytest.raises(ValueError):
            BackendDescriptor(kind="local", model_path="m.bin", timeout=0)

    def test_default_credential_reference(self):
        desc = BackendDescriptor(kind="remote", base_url="http://x", model="m")
        assert desc.credential_env == "IDEAFORGE_API_KEY"

    def test_snapshot_has_no_secret_material(self):
        desc = BackendDescriptor(kind="remote", base_url="http://x", model="m")
        snap = dict(desc.snapshot())
        assert snap["kind"] == "remote" and snap["model"] == "m"
        assert "timeout" not in snap

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            BackendDescriptor(kind="cloud", model_path="x")


class TestLocalBackend:
    def test_bit_deterministic(self, local_backend):
        request = CompletionRequest(
            prompt="a solar", params=DecodingParams(max_tokens=12, seed=5, n_candidates=3)
        )
        first = complete(local_backend, request)
        second = complete(local_backend, request)
        assert first == second
        assert len(first) == 3

    def test_candidate_seeds_derived_by_increment(self, local_backend):
        base = DecodingParams(max_tokens=12, seed=100, n_candidates=3)
        batch = local_backend.complete(CompletionRequest(prompt="a solar", params=base))
        for i, result in enumerate(batch):
            single = DecodingParams(max_tokens=12, seed=100 + i, n_candidates=1)
            alone = local_backend.complete(CompletionRequest(prompt="a solar", params=single))[0]
            assert result.token_ids == alone.token_ids
            assert result.text == alone.text

    def test_results_carry_params(self, local_backend):
        params = DecodingParams(max_tokens=4, seed=1)
        (result,) = local_backend.complete(CompletionRequest(prompt="a", params=params))
        assert result.params.seed == 1
        assert len(result.token_ids) <= 4

    def test_from_descriptor_round_trip(self, local_backend, tmp_path):
        path = tmp_path / "model.bin"
        save(local_backend.model, path)
        desc = BackendDescriptor(kind="local", model_path=str(path))
        loaded = LocalBackend.from_descriptor(desc)
        request = CompletionRequest(prompt="a solar", params=DecodingParams(max_tokens=8, seed=3))
        assert loaded.complete(request) == local_backend.complete(request)

    def test_load_failure_propagates(self, tmp_path):
        desc = BackendDescriptor(kind="local", model_path=str(tmp_path / "missing.bin"))
        with pytest.raises(OSError):
            LocalBackend.from_descriptor(desc)


class TestRemoteBackend:
    def test_fixed_completion_returned(self, server, remote_descriptor, credential):
        server.script = [("json", 200, ok_payload(["A lantern-styled drone."]))]
        backend = RemoteBackend(remote_descriptor)
        request = CompletionRequest(prompt="Applying lantern to drone:\n", params=DecodingParams())
        (result,) = backend.complete(request)
        assert result.text == "A lantern-styled drone."
        assert result.finish_reason == "stop"
        assert result.raw_response["id"] == "cmpl-1"
        assert result.params is request.params
        sent = server.requests[0]
        assert sent["path"] == "/v1/completions"
        assert sent["headers"]["authorization"] == f"Bearer {SECRET}"
        assert sent["body"]["model"] == "concept-model-v1"
        assert sent["body"]["prompt"] == "Applying lantern to drone:\n"
        assert "top_k" not in sent["body"]

    def test_429_twice_then_success_three_attempts(self, server, remote_descriptor, credential):
        server.script = [
            ("json", 429, {"error": "rate limited"}),
            ("json", 429, {"error": "rate limited"}),
            ("json", 200, ok_payload(["ok"])),
        ]
        backend = RemoteBackend(remote_descriptor)
        (result,) = backend.complete(CompletionRequest(prompt="p", params=DecodingParams()))
        assert result.text == "ok"
        assert len(server.requests) == 3

    def test_retries_exhausted(self, server, remote_descriptor, credential):
        server.script = [("json", 503, {"error": "down"})]
        backend = RemoteBackend(remote_descriptor)
        with pytest.raises(BackendError) as err:
            backend.complete(CompletionRequest(prompt="p", params=DecodingParams()))
        assert err.value.status_code == 503
        assert len(server.requests) == remote_descriptor.max_retries + 1

    def test_4xx_never_retried(self, server, remote_descriptor, credential):
        server.script = [("json", 404, {"error": "no such model"})]
        backend = RemoteBackend(remote_descriptor)
        with pytest.raises(BackendError) as err:
            backend.complete(CompletionRequest(prompt="p", params=DecodingParams()))
        assert err.value.status_code == 404
        assert len(server.requests) == 1

    def test_timeout_then_success(self, server, credential):
        descriptor = BackendDescriptor(
            kind="remote", base_url=server.url, model="m", timeout=0.3, backoff_base=0.001
        )
        server.script = [
            ("sleep", 1.0, ("json", 200, ok_payload(["late"]))),
            ("json", 200, ok_payload(["on time"])),
        ]
        backend = RemoteBackend(descriptor)
        (result,) = backend.complete(CompletionRequest(prompt="p", params=DecodingParams()))
        assert result.text == "on time"
        assert len(server.requests) == 2

    def test_malformed_not_json(self, server, remote_descriptor, credential):
        server.script = [("raw", 200, b"<html>oops</html>")]
        backend = RemoteBackend(remote_descriptor)
        with pytest.raises(BackendError, match="not JSON"):
            backend.complete(CompletionRequest(prompt="p", params=DecodingParams()))

    def test_malformed_missing_choices(self, server, remote_descriptor, credential):
        server.script = [("json", 200, {"id": "x"})]
        backend = RemoteBackend(remote_descriptor)
        with pytest.raises(BackendError, match="choices"):
            backend.complete(CompletionRequest(prompt="p", params=DecodingParams()))

    def test_choice_count_must_match(self, server, remote_descriptor, credential):
        server.script = [("json", 200, ok_payload(["only one"]))]
        backend = RemoteBackend(remote_descriptor)
        request = CompletionRequest(prompt="p", params=DecodingParams(n_candidates=2))
        with pytest.raises(BackendError, match="choices"):
            backend.complete(request)

    def test_n_candidates_respected(self, server, remote_descriptor, credential):
        server.script = [("json", 200, ok_payload(["one", "two", "three"]))]
        backend = RemoteBackend(remote_descriptor)
        request = CompletionRequest(prompt="p", params=DecodingParams(n_candidates=3))
        results = backend.complete(request)
        assert [r.text for r in results] == ["one", "two", "three"]
        assert server.requests[0]["body"]["n"] == 3

    def test_missing_credential_clear_error(self, server, remote_descriptor, monkeypatch):
        monkeypatch.delenv(DEFAULT_CREDENTIAL_ENV, raising=False)
        backend = RemoteBackend(remote_descriptor)
        with pytest.raises(BackendError, match="IDEAFORGE_API_KEY"):
            backend.complete(CompletionRequest(prompt="p", params=DecodingParams()))
        assert server.requests == []

    def test_credential_value_never_leaks(self, server, remote_descriptor, credential):
        server.script = [
            ("json", 401, {"error": "bad key"}),
            ("json", 200, ok_payload(["fine"])),
        ]
        backend = RemoteBackend(remote_descriptor)
        request = CompletionRequest(prompt="p", params=DecodingParams())
        with pytest.raises(BackendError) as err:
            backend.complete(request)
        assert SECRET not in str(err.value)
        assert SECRET not in repr(remote_descriptor)
        assert SECRET not in repr(remote_descriptor.snapshot())
        (result,) = backend.complete(request)
        assert SECRET not in repr(result)
        # the secret went exactly one place: the auth header of the requests
        for sent in server.requests:
            assert sent["headers"]["authorization"] == f"Bearer {SECRET}"

    def test_wrong_descriptor_kinds_rejected(self, remote_descriptor):
        with pytest.raises(ValueError):
            RemoteBackend(BackendDescriptor(kind="local", model_path="m.bin"))
        with pytest.raises(ValueError):
            LocalBackend.from_descriptor(remote_descriptor)
