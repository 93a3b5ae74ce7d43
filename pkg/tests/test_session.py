import json
from concurrent.futures import ThreadPoolExecutor

import pytest
from helpers import TEXT_A, TEXT_B, FakeBackend, ticking_clock

from ideaforge.backends import BackendDescriptor, BackendError
from ideaforge.decoder import DecodingParams
from ideaforge.evaluator import EvaluationThresholds
from ideaforge.prompting import AnalogyPrompt, ProblemPrompt, bundled_bank_path, load_example_bank
from ideaforge.reference_lm import prepare_sequences, train
from ideaforge.session import (
    IdeationService,
    SessionEvent,
    SessionStore,
    UnknownCandidateError,
    UnknownSessionError,
    VerdictError,
    event_from_line,
    export_document,
    parse_document,
    replay,
)

LOCAL = BackendDescriptor(kind="local", model_path="model.bin")
PROBLEM = ProblemPrompt(
    category="Cleaning Tools",
    problem_statement="Window exteriors on tall buildings are dangerous to clean by hand.",
)


@pytest.fixture
def bank():
    return load_example_bank(bundled_bank_path())


def make_service(tmp_path, fake=None, subdir="data"):
    store = SessionStore(tmp_path / subdir, clock=ticking_clock())
    factory = (lambda d: fake) if fake is not None else None
    return IdeationService(store, backend_factory=factory), store


@pytest.fixture(scope="module")
def local_model():
    texts = [
        "a cleaning arm that climbs glass walls safely",
        "a folding drone carries a lantern for night rescue work",
        "a desk with a circuit of cable channels under the top",
        "a wheelchair folds like a chair for easy car storage",
    ]
    seqs, vocab = prepare_sequences(texts)
    model, _ = train(seqs, vocab, order=2, passes=1)
    return model


class TestCreate:
    def test_problem_session_persisted_before_return(self, tmp_path):
        service, store = make_service(tmp_path)
        session = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        assert session.history == []
        assert session.events[0].kind == "created"
        events_file = store.data_dir / f"{session.id}.events.jsonl"
        assert events_file.exists()
        assert len(events_file.read_text().splitlines()) == 1
        assert (store.data_dir / f"{session.id}.snapshot.json").exists()

    def test_analogy_session_with_bundled_bank(self, tmp_path, bank):
        service, _ = make_service(tmp_path)
        inputs = AnalogyPrompt(examples=tuple(bank), query_source="lantern", query_target="drone")
        session = service.create_session("analogy", inputs, DecodingParams(), LOCAL)
        assert session.mode == "analogy"
        assert len(session.inputs.examples) == 5

    def test_empty_bank_rejected(self):
        with pytest.raises(ValueError):
            AnalogyPrompt(examples=(), query_source="a", query_target="b")

    def test_mode_input_mismatch(self, tmp_path, bank):
        service, _ = make_service(tmp_path)
        analogy = AnalogyPrompt(examples=tuple(bank), query_source="a", query_target="b")
        with pytest.raises(ValueError):
            service.create_session("problem_driven", analogy, DecodingParams(), LOCAL)
        with pytest.raises(ValueError):
            service.create_session("analogy", PROBLEM, DecodingParams(), LOCAL)

    def test_bad_mode_and_bad_id(self, tmp_path):
        service, _ = make_service(tmp_path)
        with pytest.raises(ValueError):
            service.create_session("freeform", PROBLEM, DecodingParams(), LOCAL)
        with pytest.raises(ValueError):
            service.create_session(
                "problem_driven", PROBLEM, DecodingParams(), LOCAL, session_id="../escape"
            )

    def test_duplicate_id_rejected(self, tmp_path):
        service, _ = make_service(tmp_path)
        service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL, session_id="s1")
        with pytest.raises(ValueError):
            service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL, session_id="s1")

    def test_generated_ids_unique(self, tmp_path):
        service, _ = make_service(tmp_path)
        a = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        b = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        assert a.id != b.id


class TestGenerateBatch:
    def test_batch_populates_reports_and_history(self, tmp_path):
        fake = FakeBackend([[TEXT_A, TEXT_B]])
        service, _ = make_service(tmp_path, fake)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(seed=9), LOCAL)
        batch = service.generate_batch(s.id, 2)
        assert [c.id for c in batch] == ["c001-00", "c001-01"]
        assert all(c.scores is not None for c in batch)
        assert all(c.verdict == "pending" for c in batch)
        session = service.get_session(s.id)
        assert [c.id for c in session.history] == ["c001-00", "c001-01"]
        assert session.events[-1].kind == "batch_generated"
        assert session.events[-1].payload["seed"] == 9

    def test_batch_seeds_stride_and_ids_advance(self, tmp_path):
        fake = FakeBackend([[TEXT_A], [TEXT_B]])
        service, _ = make_service(tmp_path, fake)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(seed=9), LOCAL)
        service.generate_batch(s.id, 1)
        batch2 = service.generate_batch(s.id, 1)
        assert batch2[0].id == "c002-00"
        assert fake.requests[0].params.seed == 9
        assert fake.requests[1].params.seed == 9 + 100_000

    def test_local_backend_replay_determinism(self, tmp_path, local_model):
        texts = {}
        for run in ("one", "two"):
            service, _ = make_service(tmp_path, subdir=run)
            service._backend_factory = lambda d: _local_backend(local_model)
            s = service.create_session(
                "problem_driven", PROBLEM,
                DecodingParams(max_tokens=40, temperature=0.9, seed=123), LOCAL,
                session_id="replay",
            )
            batch = service.generate_batch(s.id, 3)
            texts[run] = [c.text for c in batch]
        assert texts["one"] == texts["two"]

    def test_problem_prompt_sent_to_backend(self, tmp_path):
        fake = FakeBackend([[TEXT_A]])
        service, _ = make_service(tmp_path, fake)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        service.generate_batch(s.id, 1)
        sent = fake.requests[0].prompt
        assert sent == f"<|startoftext|>{PROBLEM.category}\n{PROBLEM.problem_statement}"

    def test_analogy_prompt_sent_to_backend(self, tmp_path, bank):
        fake = FakeBackend([[TEXT_A]])
        service, _ = make_service(tmp_path, fake)
        inputs = AnalogyPrompt(examples=tuple(bank), query_source="Lantern", query_target="Drone")
        s = service.create_session("analogy", inputs, DecodingParams(), LOCAL)
        service.generate_batch(s.id, 1)
        assert fake.requests[0].prompt.endswith("Applying lantern to drone:\n")

    def test_empty_generation_dropped_with_id_gap(self, tmp_path):
        fake = FakeBackend([["", TEXT_A]])
        service, _ = make_service(tmp_path, fake)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        batch = service.generate_batch(s.id, 2)
        assert [c.id for c in batch] == ["c001-01"]

    def test_backend_failure_records_error_event(self, tmp_path):
        fake = FakeBackend([BackendError("server returned 503", status_code=503)])
        service, _ = make_service(tmp_path, fake)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        with pytest.raises(BackendError):
            service.generate_batch(s.id, 2)
        session = service.get_session(s.id)
        assert session.history == []
        assert session.events[-1].kind == "error"
        assert session.events[-1].payload["op"] == "generate_batch"
        seqs = [e.seq for e in session.events]
        assert seqs == list(range(1, len(seqs) + 1))

    def test_count_validation_and_unknown_session(self, tmp_path):
        service, _ = make_service(tmp_path, FakeBackend([]))
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        with pytest.raises(ValueError):
            service.generate_batch(s.id, 0)
        with pytest.raises(UnknownSessionError):
            service.generate_batch("nope", 1)

    def test_params_override_recorded_then_used(self, tmp_path):
        fake = FakeBackend([[TEXT_A]])
        service, _ = make_service(tmp_path, fake)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(seed=1), LOCAL)
        hotter = DecodingParams(temperature=1.2, seed=77)
        service.generate_batch(s.id, 1, params=hotter)
        session = service.get_session(s.id)
        kinds = [e.kind for e in session.events]
        assert kinds == ["created", "params_changed", "batch_generated"]
        assert session.params == hotter
        assert fake.requests[0].params.temperature == 1.2
        assert fake.requests[0].params.seed == 77

    def test_same_params_override_records_nothing(self, tmp_path):
        fake = FakeBackend([[TEXT_A]])
        service, _ = make_service(tmp_path, fake)
        p = DecodingParams(seed=5)
        s = service.create_session("problem_driven", PROBLEM, p, LOCAL)
        service.generate_batch(s.id, 1, params=DecodingParams(seed=5))
        kinds = [e.kind for e in service.get_session(s.id).events]
        assert kinds == ["created", "batch_generated"]


class TestVerdicts:
    def make_session_with_batch(self, tmp_path, batches=None):
        fake = FakeBackend(batches or [[TEXT_A, TEXT_B]])
        service, _ = make_service(tmp_path, fake)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        batch = service.generate_batch(s.id, 2)
        return service, s.id, batch

    def test_accept_pending(self, tmp_path):
        service, sid, batch = self.make_session_with_batch(tmp_path)
        updated = service.record_verdict(sid, batch[0].id, "accepted")
        assert updated.verdict == "accepted"
        assert service.get_session(sid).candidate(batch[0].id).verdict == "accepted"

    def test_reverdict_rejected(self, tmp_path):
        service, sid, batch = self.make_session_with_batch(tmp_path)
        service.record_verdict(sid, batch[0].id, "accepted")
        with pytest.raises(VerdictError):
            service.record_verdict(sid, batch[0].id, "rejected")

    def test_unknown_candidate_and_bad_verdict(self, tmp_path):
        service, sid, batch = self.make_session_with_batch(tmp_path)
        with pytest.raises(UnknownCandidateError):
            service.record_verdict(sid, "c099-00", "accepted")
        with pytest.raises(VerdictError):
            service.record_verdict(sid, batch[0].id, "maybe")

    def test_verdict_mutates_nothing_else(self, tmp_path):
        service, sid, batch = self.make_session_with_batch(tmp_path)
        before = service.get_session(sid).candidate(batch[1].id)
        service.record_verdict(sid, batch[0].id, "rejected")
        after = service.get_session(sid)
        assert after.candidate(batch[1].id) == before
        accepted = after.candidate(batch[0].id)
        assert accepted.text == batch[0].text
        assert accepted.params == batch[0].params
        assert accepted.scores == batch[0].scores

    def test_accepted_text_joins_novelty_references(self, tmp_path):
        # batch 2 echoes an accepted batch-1 candidate, so its novelty collapses
        service, sid, batch = self.make_session_with_batch(
            tmp_path, batches=[[TEXT_A], [TEXT_A]]
        )
        first = batch[0]
        assert first.scores.novelty == 1.0  # nothing to overlap with yet
        service.record_verdict(sid, first.id, "accepted")
        (echo,) = service.generate_batch(sid, 1)
        assert echo.scores.novelty <= 0.05
        assert echo.scores.composite == 0.0


class TestExportImport:
    def build_session(self, tmp_path, subdir="a"):
        fake = FakeBackend([[TEXT_A, TEXT_B]])
        service, store = make_service(tmp_path, fake, subdir=subdir)
        s = service.create_session(
            "problem_driven", PROBLEM, DecodingParams(seed=3), LOCAL, session_id="exp"
        )
        batch = service.generate_batch(s.id, 2)
        service.record_verdict(s.id, batch[0].id, "accepted")
        return service, store, s.id

    def test_fresh_session_exports_header_only(self, tmp_path):
        service, _ = make_service(tmp_path)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        document = service.export_session(s.id)
        assert len(document.splitlines()) == 1
        header = json.loads(document)
        assert header["format"] == "ideaforge/session"
        assert header["created"]["id"] == s.id

    def test_round_trip_byte_identical(self, tmp_path):
        service, _, sid = self.build_session(tmp_path, subdir="a")
        doc1 = service.export_session(sid)
        other, _ = make_service(tmp_path, subdir="b")
        imported = other.import_session(doc1)
        assert imported.id == sid
        doc2 = other.export_session(sid)
        assert doc1 == doc2

    def test_exported_event_appended_but_not_included(self, tmp_path):
        service, _, sid = self.build_session(tmp_path)
        doc1 = service.export_session(sid)
        session = service.get_session(sid)
        assert session.events[-1].kind == "exported"
        assert "exported" not in [json.loads(l).get("kind") for l in doc1.splitlines()[1:]]
        # a second export now carries the first exported event and still round-trips
        doc2 = service.export_session(sid)
        assert doc2 != doc1
        fresh, _ = make_service(tmp_path, subdir="c")
        fresh.import_session(doc2)
        assert fresh.export_session(sid) == doc2

    def test_import_existing_id_rejected(self, tmp_path):
        service, _, sid = self.build_session(tmp_path)
        doc = service.export_session(sid)
        with pytest.raises(ValueError):
            service.import_session(doc)

    def test_import_validates_document(self, tmp_path):
        service, _ = make_service(tmp_path)
        with pytest.raises(ValueError):
            service.import_session("")
        with pytest.raises(ValueError):
            service.import_session('{"format":"something-else","version":1}\n')

    def test_import_reconstructs_state(self, tmp_path):
        service, _, sid = self.build_session(tmp_path)
        doc = service.export_session(sid)
        other, _ = make_service(tmp_path, subdir="b")
        imported = other.import_session(doc)
        assert len(imported.history) == 2
        assert imported.candidate("c001-00").verdict == "accepted"
        assert imported.params.seed == 3

    def test_credential_values_never_exported(self, tmp_path, monkeypatch):
        secret = "sk-live-9f8e7d6c"
        monkeypatch.setenv("IDEAFORGE_API_KEY", secret)
        fake = FakeBackend([[TEXT_A]])
        service, _ = make_service(tmp_path, fake)
        remote = BackendDescriptor(kind="remote", base_url="http://api.example", model="m1")
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), remote)
        service.generate_batch(s.id, 1)
        doc = service.export_session(s.id)
        assert secret not in doc
        assert "IDEAFORGE_API_KEY" in doc  # the reference, never the value


class TestEventSourcing:
    def test_replaying_log_reconstructs_bit_equal_export(self, tmp_path):
        fake = FakeBackend([[TEXT_A, TEXT_B], [TEXT_B]])
        service, store = make_service(tmp_path, fake)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(seed=4), LOCAL)
        batch = service.generate_batch(s.id, 2)
        service.record_verdict(s.id, batch[1].id, "accepted")
        service.generate_batch(s.id, 1)
        live = service.get_session(s.id)
        log = store.data_dir / f"{s.id}.events.jsonl"
        events = [event_from_line(line) for line in log.read_text().splitlines()]
        rebuilt = replay(events)
        assert export_document(rebuilt) == export_document(live)

    def test_cold_store_load_uses_snapshot_and_matches(self, tmp_path):
        fake = FakeBackend([[TEXT_A]] * 6)
        store = SessionStore(tmp_path / "d", clock=ticking_clock(), snapshot_every=3)
        service = IdeationService(store, backend_factory=lambda d: fake)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        for _ in range(5):
            service.generate_batch(s.id, 1)
        live_doc = export_document(service.get_session(s.id))
        snap = json.loads((store.data_dir / f"{s.id}.snapshot.json").read_text())
        assert snap["seq"] >= 3  # the periodic snapshot really was refreshed
        cold = SessionStore(tmp_path / "d")
        reloaded = IdeationService(cold).get_session(s.id)
        assert export_document(reloaded) == live_doc
        assert [e.seq for e in reloaded.events] == [e.seq for e in service.get_session(s.id).events]

    def test_replay_rejects_sequence_gap(self):
        payload = {
            "id": "x", "mode": "problem_driven",
            "inputs": {"category": "C", "problem_statement": "P"},
            "params": {"stop": []},
            "backend": {"kind": "local", "model_path": "m.bin"},
        }
        e1 = SessionEvent(seq=1, kind="created", timestamp=0.0, payload=payload)
        e3 = SessionEvent(seq=3, kind="exported", timestamp=1.0, payload={})
        with pytest.raises(ValueError, match="gap"):
            replay([e1, e3])

    def test_replay_requires_created_first(self):
        with pytest.raises(ValueError):
            replay([SessionEvent(seq=1, kind="exported", timestamp=0.0, payload={})])
        with pytest.raises(ValueError):
            replay([])

    def test_event_kind_validated(self):
        with pytest.raises(ValueError):
            SessionEvent(seq=1, kind="renamed", timestamp=0.0, payload={})

    def test_parse_document_round_trips_events(self, tmp_path):
        fake = FakeBackend([[TEXT_A]])
        service, _ = make_service(tmp_path, fake)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        service.generate_batch(s.id, 1)
        doc = export_document(service.get_session(s.id))
        events = parse_document(doc)
        assert [e.kind for e in events] == ["created", "batch_generated"]
        assert export_document(replay(events)) == doc


class TestConcurrency:
    def test_concurrent_ops_keep_sequence_gap_free(self, tmp_path):
        service, _ = make_service(tmp_path)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        n_threads, per_thread = 8, 10

        def hammer(t):
            for i in range(per_thread):
                service.update_params(s.id, DecodingParams(seed=t * 1000 + i))

        with ThreadPoolExecutor(n_threads) as pool:
            list(pool.map(hammer, range(n_threads)))
        session = service.get_session(s.id)
        seqs = [e.seq for e in session.events]
        assert seqs == list(range(1, n_threads * per_thread + 2))
        log = service.store.data_dir / f"{s.id}.events.jsonl"
        logged = [json.loads(line)["seq"] for line in log.read_text().splitlines()]
        assert logged == seqs

    def test_clock_timestamps_monotone(self, tmp_path):
        fake = FakeBackend([[TEXT_A]])
        service, _ = make_service(tmp_path, fake)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        service.generate_batch(s.id, 1)
        session = service.get_session(s.id)
        times = [e.timestamp for e in session.events]
        assert times == sorted(times)
        assert session.created_at == session.events[0].timestamp
        assert session.updated_at == session.events[-1].timestamp


def _local_backend(model):
    from ideaforge.backends import LocalBackend

    return LocalBackend(model)


class TestThresholdsWiring:
    def test_custom_thresholds_respected(self, tmp_path):
        fake = FakeBackend([[TEXT_A]])
        store = SessionStore(tmp_path / "d", clock=ticking_clock())
        lenient = EvaluationThresholds(min_tokens=1, max_tokens=1000)
        service = IdeationService(store, backend_factory=lambda d: fake, thresholds=lenient)
        s = service.create_session("problem_driven", PROBLEM, DecodingParams(), LOCAL)
        (cand,) = service.generate_batch(s.id, 1)
        assert cand.scores.length_ok
