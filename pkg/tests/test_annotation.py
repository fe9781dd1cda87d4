import json

import pytest
from fastapi.testclient import TestClient

from crux.annotation import (
    AnnotationStore,
    T1Task,
    T2Task,
    build_tasks,
    create_app,
    load_results,
    normalize_spans,
)
from crux.annotation.tasks import RUBRIC_VERSION, ResultRecord, text_sha
from crux.errors import SchemaError


@pytest.fixture
def t1_task():
    return T1Task(
        task_id="t1-t0-bm25",
        topic_id="t0",
        report_text="The alpha survey found beta readings near the gamma ridge.",
        questions=((0, "what is alpha?"), (2, "what is gamma?")),
        context_source="bm25",
    )


@pytest.fixture
def t2_task():
    return T2Task(
        task_id="t2-t0",
        topic_id="t0",
        passage_id="p0",
        passage_text="alpha beta gamma",
        questions=((0, "what is alpha?"), (1, "what is beta?")),
    )


@pytest.fixture
def client(t1_task, t2_task):
    store = AnnotationStore()
    app = create_app(
        store,
        [t1_task],
        [t2_task],
        annotators=["ann1", "ann2"],
        model_coverage={"t1-t0-bm25": 0.5},
        model_ratings={("t2-t0", 0): 5, ("t2-t0", 1): 0},
    )
    return TestClient(app), store


def submit_t1(client, task_id, judgments, annotator="ann1"):
    return client.post(f"/tasks/{task_id}/t1?annotator={annotator}", json=judgments)


class TestSpans:
    def test_sorted_and_merged(self):
        assert normalize_spans([(10, 20), (0, 5), (15, 30)]) == [(0, 5), (10, 30)]

    def test_adjacent_touching_merged(self):
        assert normalize_spans([(0, 5), (5, 8)]) == [(0, 8)]

    def test_disjoint_kept(self):
        assert normalize_spans([(0, 2), (4, 6)]) == [(0, 2), (4, 6)]


class TestTaskPayloads:
    def test_t1_payload_hides_source_and_carries_hash(self, t1_task):
        payload = t1_task.payload()
        assert "context_source" not in json.dumps(payload)
        assert payload["report_sha256"] == text_sha(t1_task.report_text)
        assert payload["questions"] == [
            {"idx": 0, "text": "what is alpha?"},
            {"idx": 2, "text": "what is gamma?"},
        ]

    def test_t2_payload_carries_rubric(self, t2_task):
        payload = t2_task.payload()
        assert payload["rubric_version"] == RUBRIC_VERSION
        assert payload["passage_sha256"] == text_sha(t2_task.passage_text)


class TestTaskQueue:
    def test_next_task_requires_known_annotator(self, client):
        cl, _ = client
        assert cl.get("/tasks/next?annotator=ghost").status_code == 401

    def test_next_task_idempotent_until_complete(self, client, t1_task):
        cl, _ = client
        first = cl.get("/tasks/next?annotator=ann1")
        assert first.status_code == 200
        assert cl.get("/tasks/next?annotator=ann1").json() == first.json()

    def test_exhausted_queue_404(self, client, t1_task):
        cl, _ = client
        judgments = [
            {"question_idx": 0, "answerable": True, "spans": [[0, 9]]},
            {"question_idx": 2, "answerable": False, "spans": []},
        ]
        assert submit_t1(cl, t1_task.task_id, judgments).status_code == 200
        assert cl.get("/tasks/next?annotator=ann1").status_code == 404
        # The other annotator still has work.
        assert cl.get("/tasks/next?annotator=ann2").status_code == 200

    def test_t2_queue(self, client, t2_task):
        cl, _ = client
        got = cl.get("/tasks/next?annotator=ann1&kind=t2")
        assert got.status_code == 200
        assert got.json()["task_id"] == t2_task.task_id

    def test_unknown_kind_422(self, client):
        cl, _ = client
        assert cl.get("/tasks/next?annotator=ann1&kind=t9").status_code == 422


class TestT1Submission:
    def test_wrong_question_set_409(self, client, t1_task):
        cl, _ = client
        judgments = [{"question_idx": 0, "answerable": False, "spans": []}]
        assert submit_t1(cl, t1_task.task_id, judgments).status_code == 409

    def test_out_of_bounds_span_422(self, client, t1_task):
        cl, _ = client
        judgments = [
            {"question_idx": 0, "answerable": True, "spans": [[0, 10_000]]},
            {"question_idx": 2, "answerable": False, "spans": []},
        ]
        assert submit_t1(cl, t1_task.task_id, judgments).status_code == 422

    def test_answerable_without_span_422(self, client, t1_task):
        cl, _ = client
        judgments = [
            {"question_idx": 0, "answerable": True, "spans": []},
            {"question_idx": 2, "answerable": False, "spans": []},
        ]
        assert submit_t1(cl, t1_task.task_id, judgments).status_code == 422

    def test_unknown_task_404(self, client):
        cl, _ = client
        assert submit_t1(cl, "t1-nope", []).status_code == 404

    def test_resubmission_overwrites_keeps_history(self, client, t1_task):
        cl, store = client
        first = [
            {"question_idx": 0, "answerable": True, "spans": [[0, 9]]},
            {"question_idx": 2, "answerable": False, "spans": []},
        ]
        second = [
            {"question_idx": 0, "answerable": False, "spans": []},
            {"question_idx": 2, "answerable": True, "spans": [[4, 15]]},
        ]
        assert submit_t1(cl, t1_task.task_id, first).status_code == 200
        assert submit_t1(cl, t1_task.task_id, second).status_code == 200
        answers = store.t1_answers(t1_task.task_id, "ann1")
        assert answers == {0: False, 2: True}
        assert len(store.history) == 4


class TestT2Submission:
    def test_rating_recorded(self, client, t2_task):
        cl, store = client
        body = {"question_idx": 0, "rating": 4}
        got = cl.post(f"/tasks/{t2_task.task_id}/t2?annotator=ann1", json=body)
        assert got.status_code == 200
        assert store.t2_ratings(t2_task.task_id, "ann1") == {0: 4}

    def test_out_of_scale_rating_422(self, client, t2_task):
        cl, _ = client
        body = {"question_idx": 0, "rating": 6}
        assert cl.post(f"/tasks/{t2_task.task_id}/t2?annotator=ann1", json=body).status_code == 422

    def test_foreign_question_409(self, client, t2_task):
        cl, _ = client
        body = {"question_idx": 9, "rating": 3}
        assert cl.post(f"/tasks/{t2_task.task_id}/t2?annotator=ann1", json=body).status_code == 409


def complete_t1(cl, task_id, annotator, bits):
    judgments = [
        {
            "question_idx": idx,
            "answerable": bit,
            "spans": [[0, 5]] if bit else [],
        }
        for idx, bit in bits.items()
    ]
    assert submit_t1(cl, task_id, judgments, annotator).status_code == 200


class TestStats:
    def test_human_coverage_means_and_alignment(self, client, t1_task):
        cl, _ = client
        complete_t1(cl, t1_task.task_id, "ann1", {0: True, 2: False})
        complete_t1(cl, t1_task.task_id, "ann2", {0: True, 2: True})
        body = cl.get("/stats/human-coverage").json()
        row = body["per_report"][t1_task.task_id]
        assert row["by_annotator"] == {"ann1": 0.5, "ann2": 1.0}
        assert row["mean"] == pytest.approx(0.75)
        assert "fleiss_kappa" in body

    def test_incomplete_annotator_excluded(self, client, t1_task):
        cl, _ = client
        complete_t1(cl, t1_task.task_id, "ann1", {0: True, 2: False})
        body = cl.get("/stats/human-coverage").json()
        assert list(body["per_report"][t1_task.task_id]["by_annotator"]) == ["ann1"]
        assert "fleiss_kappa" not in body

    def test_judge_alignment_empty(self, client):
        cl, _ = client
        assert cl.get("/stats/judge-alignment").json() == {"pairs": 0}

    def test_judge_alignment_classes(self, client, t2_task):
        cl, _ = client
        # Model said 5 and 0; both humans agree on question 0, disagree on 1.
        for annotator, ratings in [("ann1", {0: 5, 1: 0}), ("ann2", {0: 4, 1: 3})]:
            for idx, rating in ratings.items():
                body = {"question_idx": idx, "rating": rating}
                assert (
                    cl.post(f"/tasks/{t2_task.task_id}/t2?annotator={annotator}", json=body).status_code
                    == 200
                )
        body = cl.get("/stats/judge-alignment").json()
        assert body["pairs"] == 4
        classes = body["classes"]
        # Model positives: q0 twice, both human-positive.
        assert classes["answerable"]["precision"] == pytest.approx(1.0)
        # Human positives: q0 twice plus ann2's q1; model catches two of three.
        assert classes["answerable"]["recall"] == pytest.approx(2 / 3)


class TestJournal:
    def test_replay_restores_state(self, tmp_path):
        journal = tmp_path / "journal.jsonl"
        store = AnnotationStore(str(journal))
        store.record_t1("task", "ann1", 0, True, [(0, 4)])
        store.record_t2("task2", "ann1", 1, 5, RUBRIC_VERSION)
        store.record_t1("task", "ann1", 0, False, [])

        revived = AnnotationStore(str(journal))
        assert revived.t1_answers("task", "ann1") == {0: False}
        assert revived.t2_ratings("task2", "ann1") == {1: 5}
        assert len(revived.history) == 3

    def test_missing_journal_starts_empty(self, tmp_path):
        store = AnnotationStore(str(tmp_path / "absent.jsonl"))
        assert store.history == []


class TestBuildTasks:
    def test_bundles_from_dataset(self, mock_dataset):
        results = [
            ResultRecord(topic.topic_id, "bm25", f"generated text for {topic.topic_id}")
            for topic in mock_dataset.topics
        ]
        t1_tasks, t2_tasks, model_ratings = build_tasks(mock_dataset, results, seed=1)
        assert len(t1_tasks) == len(results)
        assert len(t2_tasks) == len(mock_dataset.topics)
        for task in t1_tasks:
            assert task.questions  # only answerable questions are offered
        for task in t2_tasks:
            for q_idx, _ in task.questions:
                assert (task.task_id, q_idx) in model_ratings

    def test_seeded_selection_reproducible(self, mock_dataset):
        results = [ResultRecord(mock_dataset.topics[0].topic_id, "oracle", "text")]
        a = build_tasks(mock_dataset, results, seed=7)
        b = build_tasks(mock_dataset, results, seed=7)
        assert a == b

    def test_load_results(self, tmp_path):
        path = tmp_path / "results.jsonl"
        path.write_text(
            json.dumps({"topic_id": "t0", "source": "bm25", "text": "the report"}) + "\n",
            encoding="utf-8",
        )
        assert load_results(str(path)) == [ResultRecord("t0", "bm25", "the report")]

    def test_load_results_bad_line(self, tmp_path):
        path = tmp_path / "results.jsonl"
        path.write_text('{"topic_id": "t0"}\n', encoding="utf-8")
        with pytest.raises(SchemaError, match=":1"):
            load_results(str(path))
