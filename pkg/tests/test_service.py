from __future__ import annotations

import io
import threading

import pytest
from fastapi.testclient import TestClient
from PIL import Image

from boxlab.images import content_hash_of
from boxlab.pipeline import MockProvider
from boxlab.service import ServiceState, create_app
from boxlab.store import load

PETS_CFG = """
[labels]
cat = 1
dog = 1
dachshund = 2, dog
siamese = 2, cat

[synonyms]
siamese cat = siamese
"""


def _png(width: int = 40, height: int = 30, color=(10, 120, 200)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", (width, height), color).save(buf, format="PNG")
    return buf.getvalue()


CAT_PNG = _png(40, 30, (200, 60, 60))
DOG_PNG = _png(40, 30, (60, 200, 60))

FIXTURES = {
    content_hash_of(CAT_PNG): "Siamese cat (Cat)",
    content_hash_of(DOG_PNG): "Dachshund (Dog)",
}


@pytest.fixture()
def state(tmp_path):
    service_state = ServiceState(tmp_path / "projects", provider=MockProvider(FIXTURES))
    yield service_state
    service_state.runner.shutdown()


@pytest.fixture()
def client(state):
    return TestClient(create_app(state))


def _make_project(client, name: str = "demo") -> str:
    response = client.post("/v1/projects", json={"name": name, "taxonomy": PETS_CFG})
    assert response.status_code == 201
    return response.json()["id"]


def _upload(client, project_id: str, *named_bytes) -> list:
    files = [("files", (name, data, "image/png")) for name, data in named_bytes]
    response = client.post(f"/v1/projects/{project_id}/images", files=files)
    assert response.status_code == 201
    return response.json()


def _annotate(client, project_id: str, image_id: str, box=None, annotator="alice") -> dict:
    body = {"image_id": image_id}
    if box is not None:
        body["box"] = box
    response = client.post(
        f"/v1/projects/{project_id}/annotations", json=body, headers={"X-Annotator-Id": annotator}
    )
    assert response.status_code == 201, response.text
    return response.json()


def _finish_job(client, project_id: str, idempotency_key: str, filter_spec=None) -> dict:
    body = {"idempotency_key": idempotency_key, "filter": filter_spec or {}}
    response = client.post(f"/v1/projects/{project_id}/label-jobs", json=body)
    assert response.status_code == 202, response.text
    job = response.json()
    for _ in range(500):
        job = client.get(f"/v1/label-jobs/{job['job_id']}").json()
        if job["state"] in ("Done", "Failed"):
            return job
        import time

        time.sleep(0.01)
    raise AssertionError(f"job never settled: {job}")


# --- projects ------------------------------------------------------------


def test_create_list_get_project(client):
    project_id = _make_project(client, "zoo-batch")
    listed = client.get("/v1/projects").json()
    assert [p["name"] for p in listed] == ["zoo-batch"]
    fetched = client.get(f"/v1/projects/{project_id}").json()
    assert fetched["id"] == project_id
    assert fetched["image_count"] == 0
    assert fetched["annotation_count"] == 0
    # the detail payload carries the taxonomy so clients can render tiers
    assert fetched["taxonomy"]["labels"]["dachshund"] == {"tier": 2, "parent": "dog"}
    assert fetched["taxonomy"]["labels"]["cat"] == {"tier": 1, "parent": None}
    assert fetched["taxonomy"]["synonyms"] == {"siamese cat": "siamese"}
    assert "taxonomy" not in listed[0]  # list stays lightweight


def test_get_unknown_project_is_404(client):
    response = client.get("/v1/projects/nope")
    assert response.status_code == 404
    body = response.json()
    assert body["error"]["type"] == "UnknownProjectError"
    assert "nope" in body["error"]["message"]


def test_create_project_with_partial_config(client):
    response = client.post(
        "/v1/projects",
        json={"name": "crops", "config": {"submission_mode": "crop", "batch_size": 2}},
    )
    assert response.status_code == 201


def test_create_project_with_bad_taxonomy_is_422(client):
    response = client.post("/v1/projects", json={"name": "x", "taxonomy": "[labels]\na = 9\n"})
    assert response.status_code == 422


def test_projects_survive_restart(state, client, tmp_path):
    project_id = _make_project(client)
    image = _upload(client, project_id, ("one.png", CAT_PNG))[0]
    _annotate(client, project_id, image["id"], box={"x": 1, "y": 2, "width": 5, "height": 5})

    reloaded = ServiceState(state.root, provider=None)
    try:
        assert reloaded.load_existing() == 1
        again = reloaded.projects[project_id]
        assert again == state.projects[project_id]
    finally:
        reloaded.runner.shutdown()


# --- images ----------------------------------------------------------------


def test_upload_and_list_images(client):
    project_id = _make_project(client)
    records = _upload(client, project_id, ("cat.png", CAT_PNG), ("dog.png", DOG_PNG))
    assert {r["source_name"] for r in records} == {"cat.png", "dog.png"}
    listed = client.get(f"/v1/projects/{project_id}/images").json()
    assert [r["source_name"] for r in listed] == ["cat.png", "dog.png"]


def test_image_content_round_trips(client):
    project_id = _make_project(client)
    record = _upload(client, project_id, ("cat.png", CAT_PNG))[0]
    response = client.get(f"/v1/images/{record['id']}/content")
    assert response.status_code == 200
    assert response.headers["content-type"] == "image/png"
    assert response.content == CAT_PNG


def test_image_content_unknown_is_404(client):
    assert client.get("/v1/images/ghost/content").status_code == 404


def test_upload_undecodable_image_is_422(client):
    project_id = _make_project(client)
    files = [("files", ("junk.png", b"not an image", "image/png"))]
    response = client.post(f"/v1/projects/{project_id}/images", files=files)
    assert response.status_code == 422


# --- annotations -------------------------------------------------------------


def test_create_annotation_records_annotator_identity(client, state):
    project_id = _make_project(client)
    image = _upload(client, project_id, ("cat.png", CAT_PNG))[0]
    created = _annotate(
        client, project_id, image["id"], box={"x": 1, "y": 2, "width": 8, "height": 6}, annotator="ada"
    )
    assert created["status"] == "BoxDrawn"
    assert created["region"] == {"kind": "Box", "x": 1, "y": 2, "width": 8, "height": 6}
    assert created["history"][0]["actor"] == {"kind": "Human", "id": "ada"}


def test_create_whole_image_annotation(client):
    project_id = _make_project(client)
    image = _upload(client, project_id, ("cat.png", CAT_PNG))[0]
    created = _annotate(client, project_id, image["id"])
    assert created["region"] == {"kind": "WholeImage"}


def test_create_annotation_invalid_box_is_422(client):
    project_id = _make_project(client)
    image = _upload(client, project_id, ("cat.png", CAT_PNG))[0]
    response = client.post(
        f"/v1/projects/{project_id}/annotations",
        json={"image_id": image["id"], "box": {"x": 0, "y": 0, "width": 0, "height": 5}},
    )
    assert response.status_code == 422
    assert response.json()["error"]["type"] == "ZeroAreaError"


def test_create_annotation_unknown_image_is_404(client):
    project_id = _make_project(client)
    response = client.post(f"/v1/projects/{project_id}/annotations", json={"image_id": "ghost"})
    assert response.status_code == 404


def test_list_annotations_filters_by_status(client):
    project_id = _make_project(client)
    image = _upload(client, project_id, ("cat.png", CAT_PNG))[0]
    _annotate(client, project_id, image["id"])
    listed = client.get(f"/v1/projects/{project_id}/annotations", params={"status": "BoxDrawn"})
    assert len(listed.json()) == 1
    empty = client.get(f"/v1/projects/{project_id}/annotations", params={"status": "Verified"})
    assert empty.json() == []
    bad = client.get(f"/v1/projects/{project_id}/annotations", params={"status": "Nope"})
    assert bad.status_code == 422
    assert bad.json()["error"]["type"] == "InvalidFilterError"


# --- verdicts ------------------------------------------------------------------


def _labeled_annotation(client, project_id: str) -> str:
    image = _upload(client, project_id, ("cat.png", CAT_PNG))[0]
    annotation = _annotate(client, project_id, image["id"])
    job = _finish_job(client, project_id, "label-once")
    assert job["state"] == "Done", job
    return annotation["id"]


def test_accept_verdict(client):
    project_id = _make_project(client)
    annotation_id = _labeled_annotation(client, project_id)
    response = client.post(
        f"/v1/annotations/{annotation_id}/verdict",
        json={"verdict": "Accept"},
        headers={"X-Annotator-Id": "bob"},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "Verified"
    assert body["history"][-1]["actor"] == {"kind": "Human", "id": "bob"}


def test_accept_before_labeling_is_409(client):
    project_id = _make_project(client)
    image = _upload(client, project_id, ("cat.png", CAT_PNG))[0]
    annotation = _annotate(client, project_id, image["id"])
    response = client.post(f"/v1/annotations/{annotation['id']}/verdict", json={"verdict": "Accept"})
    assert response.status_code == 409
    assert response.json()["error"]["type"] == "IllegalTransitionError"


def test_correct_verdict_requires_label(client):
    project_id = _make_project(client)
    annotation_id = _labeled_annotation(client, project_id)
    missing = client.post(f"/v1/annotations/{annotation_id}/verdict", json={"verdict": "Correct"})
    assert missing.status_code == 422
    response = client.post(
        f"/v1/annotations/{annotation_id}/verdict",
        json={"verdict": "Correct", "label": "Himalayan cat (Cat)"},
    )
    assert response.status_code == 200
    assert response.json()["status"] == "Corrected"
    assert response.json()["human_label"] == "Himalayan cat (Cat)"


def test_flag_verdict_from_box_drawn(client):
    project_id = _make_project(client)
    image = _upload(client, project_id, ("cat.png", CAT_PNG))[0]
    annotation = _annotate(client, project_id, image["id"])
    response = client.post(
        f"/v1/annotations/{annotation['id']}/verdict",
        json={"verdict": "Flag", "reason": "blurry"},
    )
    assert response.status_code == 200
    assert response.json()["status"] == "Flagged"


def test_unknown_verdict_is_422(client):
    project_id = _make_project(client)
    annotation_id = _labeled_annotation(client, project_id)
    response = client.post(f"/v1/annotations/{annotation_id}/verdict", json={"verdict": "Maybe"})
    assert response.status_code == 422
    assert response.json()["error"]["type"] == "InvalidRequestError"


def test_verdict_unknown_annotation_is_404(client):
    response = client.post("/v1/annotations/ghost/verdict", json={"verdict": "Accept"})
    assert response.status_code == 404


def test_verdict_missing_body_is_422(client):
    response = client.post("/v1/annotations/ghost/verdict", json={})
    assert response.status_code == 422  # pydantic validation, not our handler


# --- label jobs -------------------------------------------------------------------


def test_label_job_end_to_end(client):
    project_id = _make_project(client)
    images = _upload(client, project_id, ("cat.png", CAT_PNG), ("dog.png", DOG_PNG))
    for image in images:
        _annotate(client, project_id, image["id"])
    job = _finish_job(client, project_id, "run-1", {"status": "BoxDrawn"})
    assert job["state"] == "Done"
    assert len(job["outcomes"]) == 2
    assert all(o["ok"] for o in job["outcomes"])
    labeled = client.get(f"/v1/projects/{project_id}/annotations", params={"status": "AiLabeled"}).json()
    assert {a["ai_label"]["fine"] for a in labeled} == {"Siamese cat", "Dachshund"}


def test_label_job_idempotent_resubmission(client):
    project_id = _make_project(client)
    image = _upload(client, project_id, ("cat.png", CAT_PNG))[0]
    _annotate(client, project_id, image["id"])
    first = _finish_job(client, project_id, "same-key")
    body = {"idempotency_key": "same-key", "filter": {}}
    again = client.post(f"/v1/projects/{project_id}/label-jobs", json=body).json()
    assert again["job_id"] == first["job_id"]
    annotations = client.get(f"/v1/projects/{project_id}/annotations").json()
    assert len(annotations[0]["history"]) == 2  # labeled exactly once


def test_label_job_zero_match_completes_immediately(client):
    project_id = _make_project(client)
    response = client.post(
        f"/v1/projects/{project_id}/label-jobs",
        json={"idempotency_key": "empty", "filter": {"status": "Flagged"}},
    )
    assert response.status_code == 202
    assert response.json()["state"] == "Done"
    assert response.json()["outcomes"] == []


def test_label_job_invalid_filter_is_422(client):
    project_id = _make_project(client)
    response = client.post(
        f"/v1/projects/{project_id}/label-jobs",
        json={"idempotency_key": "bad", "filter": {"nope": 1}},
    )
    assert response.status_code == 422


def test_label_job_without_provider_is_422(tmp_path):
    state = ServiceState(tmp_path / "p", provider=None)
    try:
        client = TestClient(create_app(state))
        project_id = _make_project(client)
        response = client.post(
            f"/v1/projects/{project_id}/label-jobs", json={"idempotency_key": "x"}
        )
        assert response.status_code == 422
        assert "provider" in response.json()["error"]["message"]
    finally:
        state.runner.shutdown()


def test_unknown_job_is_404(client):
    assert client.get("/v1/label-jobs/ghost").status_code == 404


def test_human_verdict_beats_inflight_label_job(tmp_path):
    class GatedProvider:
        def __init__(self, inner):
            self.inner = inner
            self.entered = threading.Event()
            self.release = threading.Event()

        def complete(self, model_id, prompt, items):
            self.entered.set()
            assert self.release.wait(5), "test never released the provider"
            return self.inner.complete(model_id, prompt, items)

    gated = GatedProvider(MockProvider(FIXTURES))
    state = ServiceState(tmp_path / "p", provider=gated)
    try:
        client = TestClient(create_app(state))
        project_id = _make_project(client)
        image = _upload(client, project_id, ("cat.png", CAT_PNG))[0]
        annotation = _annotate(client, project_id, image["id"])

        submitted = client.post(
            f"/v1/projects/{project_id}/label-jobs", json={"idempotency_key": "slow"}
        ).json()
        assert gated.entered.wait(5)
        flagged = client.post(
            f"/v1/annotations/{annotation['id']}/verdict",
            json={"verdict": "Flag", "reason": "occluded"},
        )
        assert flagged.status_code == 200
        gated.release.set()

        job = state.runner.wait(submitted["job_id"]).to_dict()
        assert job["state"] == "Done"
        assert job["outcomes"][0]["ok"] is False
        assert job["outcomes"][0]["error"].startswith("Conflict:")
        final = client.get(f"/v1/projects/{project_id}/annotations").json()[0]
        assert final["status"] == "Flagged"
    finally:
        state.runner.shutdown()


# --- stats and export ----------------------------------------------------------------


def test_stats_counts_agreement_accuracy(client, state):
    project_id = _make_project(client)
    images = _upload(client, project_id, ("cat.png", CAT_PNG), ("dog.png", DOG_PNG))
    by_name = {i["source_name"]: i for i in images}
    cat_ann = _annotate(client, project_id, by_name["cat.png"]["id"])
    dog_ann = _annotate(client, project_id, by_name["dog.png"]["id"])
    _finish_job(client, project_id, "label")
    client.post(f"/v1/annotations/{cat_ann['id']}/verdict", json={"verdict": "Accept"})
    client.post(
        f"/v1/annotations/{dog_ann['id']}/verdict",
        json={"verdict": "Correct", "label": "German Shepherd (Dog)"},
    )
    # ground truth is project-internal state, set directly for the check
    project = state.projects[project_id]
    project.truth[cat_ann["id"]] = "cat"
    project.truth[dog_ann["id"]] = "dog"

    stats = client.get(f"/v1/projects/{project_id}/stats").json()
    assert stats["counts"]["total"] == 2
    assert stats["counts"]["Verified"] == 1
    assert stats["counts"]["Corrected"] == 1
    assert stats["agreement"]["cat"]["accepted"] == 1
    assert stats["agreement"]["dog"]["corrected"] == 1
    assert stats["accuracy"]["total"] == 2
    assert stats["accuracy"]["correct"] == 2  # base policy: both AI labels were right
    assert stats["cost_inputs"] == {"n_items": 2, "n_ai_labeled": 2, "n_reviewed": 2}


def test_stats_accuracy_absent_without_truth(client):
    project_id = _make_project(client)
    stats = client.get(f"/v1/projects/{project_id}/stats").json()
    assert stats["accuracy"] is None
    assert stats["counts"]["total"] == 0


def test_stats_rejects_unknown_policy(client):
    project_id = _make_project(client)
    response = client.get(f"/v1/projects/{project_id}/stats", params={"policy": "fuzzy"})
    assert response.status_code == 422
    assert response.json()["error"]["type"] == "InvalidRequestError"


def test_export_endpoint(client):
    project_id = _make_project(client)
    annotation_id = _labeled_annotation(client, project_id)
    client.post(f"/v1/annotations/{annotation_id}/verdict", json={"verdict": "Accept"})
    document = client.get(f"/v1/projects/{project_id}/export").json()
    assert [c["name"] for c in document["categories"]] == ["siamese cat"]
    base = client.get(f"/v1/projects/{project_id}/export", params={"level": "base"}).json()
    assert [c["name"] for c in base["categories"]] == ["cat"]
    assert base["annotations"][0]["bbox"] == [0, 0, 40, 30]


def test_export_with_status_filter(client):
    project_id = _make_project(client)
    _labeled_annotation(client, project_id)
    document = client.get(
        f"/v1/projects/{project_id}/export", params={"status": "AiLabeled"}
    ).json()
    assert len(document["annotations"]) == 1
    bad = client.get(f"/v1/projects/{project_id}/export", params={"status": "Nope"})
    assert bad.status_code == 422


def test_export_unlabeled_is_409(client):
    project_id = _make_project(client)
    image = _upload(client, project_id, ("cat.png", CAT_PNG))[0]
    _annotate(client, project_id, image["id"])
    response = client.get(f"/v1/projects/{project_id}/export", params={"status": "BoxDrawn"})
    assert response.status_code == 409
    assert response.json()["error"]["type"] == "UnlabeledInExportError"
