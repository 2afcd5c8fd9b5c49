"""The request/response service the annotator UI talks to.

All endpoints live under /v1. Annotator identity arrives in the
X-Annotator-Id header (no session state). Reads are unrestricted; writes
to a project are serialized through its writer lock and persisted to disk
before the response returns. Label jobs run on the in-process runner and
apply their results through the same writer lock.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from fastapi import FastAPI, Header, UploadFile
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .core import Actor, Annotation, AnnotationEvent, AnnotationStatus, BoundingBox
from .errors import (
    BoxlabError,
    CorruptProjectError,
    DanglingReferenceError,
    EmptyEvaluationError,
    EmptyLabelError,
    IllegalTransitionError,
    InvalidBoxError,
    InvalidFilterError,
    InvalidRequestError,
    OutOfBoundsError,
    UnknownAnnotationError,
    UnknownProjectError,
    UnlabeledInExportError,
    ZeroAreaError,
)
from .evaluation import agreement_stats, evaluate_annotations
from .images import ImageRecord
from .jobs import JobRunner, LabelJob, select_annotations
from .pipeline import ItemOutcome, Provider, SubmissionMode, TaskConfig, label_batch
from .store import MANIFEST_NAME, Project, export_coco, load, save
from .taxonomy import EMPTY_TAXONOMY, MatchPolicy, Taxonomy

_ERROR_STATUS: Tuple[Tuple[type, int], ...] = (
    (UnknownProjectError, 404),
    (UnknownAnnotationError, 404),
    (DanglingReferenceError, 404),
    (IllegalTransitionError, 409),
    (UnlabeledInExportError, 409),
    (CorruptProjectError, 500),
    (InvalidFilterError, 422),
    (InvalidBoxError, 422),
    (ZeroAreaError, 422),
    (OutOfBoundsError, 422),
    (EmptyLabelError, 422),
    (BoxlabError, 422),
)


def _status_for(exc: BoxlabError) -> int:
    for klass, code in _ERROR_STATUS:
        if isinstance(exc, klass):
            return code
    return 422


class ServiceState:
    """Projects on disk plus the runtime pieces the endpoints share."""

    def __init__(self, root, provider: Optional[Provider] = None, max_workers: int = 2):
        self.root = Path(root)
        self.provider = provider
        self.runner = JobRunner(max_workers=max_workers)
        self.projects: Dict[str, Project] = {}
        self._writers: Dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def load_existing(self) -> int:
        """Load every project directory under root; returns the count."""
        count = 0
        if self.root.is_dir():
            for child in sorted(self.root.iterdir()):
                if (child / MANIFEST_NAME).is_file():
                    self.attach(load(child))
                    count += 1
        return count

    def attach(self, project: Project) -> Project:
        with self._registry_lock:
            self.projects[project.id] = project
            self._writers.setdefault(project.id, threading.Lock())
        return project

    def get_project(self, project_id: str) -> Project:
        project = self.projects.get(project_id)
        if project is None:
            raise UnknownProjectError(f"unknown project {project_id}")
        return project

    def writer(self, project_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._writers[project_id]

    def persist(self, project: Project) -> None:
        save(project, self.root / project.id)

    def find_image(self, image_id: str) -> Tuple[Project, ImageRecord]:
        for project in self.projects.values():
            record = project.images.get(image_id)
            if record is not None:
                return project, record
        raise DanglingReferenceError(f"unknown image {image_id}")

    def find_annotation(self, annotation_id: str) -> Tuple[Project, Annotation]:
        for project in self.projects.values():
            annotation = project.annotations.get(annotation_id)
            if annotation is not None:
                return project, annotation
        raise UnknownAnnotationError(f"unknown annotation {annotation_id}")


class BoxBody(BaseModel):
    x: int
    y: int
    width: int
    height: int


class CreateProjectBody(BaseModel):
    name: str
    taxonomy: Optional[str] = None
    config: Optional[dict] = None


class CreateAnnotationBody(BaseModel):
    image_id: str
    box: Optional[BoxBody] = None


class VerdictBody(BaseModel):
    verdict: str  # Accept | Correct | Flag
    label: Optional[str] = None
    reason: Optional[str] = None


class LabelJobBody(BaseModel):
    filter: dict = {}
    idempotency_key: str


def _project_summary(project: Project) -> dict:
    return {
        "id": project.id,
        "name": project.name,
        "created_at": project.created_at.isoformat(),
        "image_count": len(project.images),
        "annotation_count": len(project.annotations),
    }


def _partial_config(data: Optional[dict]) -> TaskConfig:
    """Fill a partial config body with mode-appropriate defaults."""
    if not data:
        return TaskConfig()
    mode = SubmissionMode(data.get("submission_mode", "overlay"))
    defaults = TaskConfig.for_mode(mode).to_dict()
    defaults.update(data)
    return TaskConfig.from_dict(defaults)


def create_app(state: ServiceState, static_dir=None) -> FastAPI:
    app = FastAPI(title="boxlab", version="1.0")
    app.state.boxlab = state

    @app.exception_handler(BoxlabError)
    async def _boxlab_error(request, exc: BoxlabError):
        payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        return JSONResponse(status_code=_status_for(exc), content=payload)

    @app.get("/v1/projects")
    def list_projects():
        return [_project_summary(p) for p in sorted(state.projects.values(), key=lambda p: p.name)]

    @app.post("/v1/projects", status_code=201)
    def create_project(body: CreateProjectBody):
        try:
            taxonomy = Taxonomy.parse(body.taxonomy) if body.taxonomy else EMPTY_TAXONOMY
            config = _partial_config(body.config)
        except ValueError as exc:
            raise InvalidRequestError(str(exc)) from exc
        project = Project.new(body.name, config=config, taxonomy=taxonomy)
        state.attach(project)
        with state.writer(project.id):
            state.persist(project)
        return _project_summary(project)

    @app.get("/v1/projects/{project_id}")
    def get_project(project_id: str):
        project = state.get_project(project_id)
        detail = _project_summary(project)
        detail["taxonomy"] = {
            "labels": {
                name: {"tier": entry.tier, "parent": entry.parent}
                for name, entry in sorted(project.taxonomy.entries.items())
            },
            "synonyms": dict(sorted(project.taxonomy.synonyms.items())),
        }
        return detail

    @app.post("/v1/projects/{project_id}/images", status_code=201)
    async def upload_images(project_id: str, files: List[UploadFile]):
        project = state.get_project(project_id)
        records = []
        with state.writer(project_id):
            for upload in files:
                data = await upload.read()
                records.append(project.add_image(data, upload.filename or "upload"))
            state.persist(project)
        return [r.to_dict() for r in records]

    @app.get("/v1/projects/{project_id}/images")
    def list_images(project_id: str):
        project = state.get_project(project_id)
        records = sorted(project.images.records(), key=lambda r: r.source_name)
        return [r.to_dict() for r in records]

    @app.get("/v1/images/{image_id}/content")
    def image_content(image_id: str):
        project, record = state.find_image(image_id)
        data = project.images.raw_bytes(record.id)
        return Response(content=data, media_type=f"image/{record.format}")

    @app.post("/v1/projects/{project_id}/annotations", status_code=201)
    def create_annotation(
        project_id: str,
        body: CreateAnnotationBody,
        annotator: str = Header("anonymous", alias="X-Annotator-Id"),
    ):
        project = state.get_project(project_id)
        box = None
        if body.box is not None:
            box = BoundingBox(body.box.x, body.box.y, body.box.width, body.box.height)
        with state.writer(project_id):
            annotation = project.create_box(body.image_id, box=box, actor=Actor.human(annotator))
            state.persist(project)
        return annotation.to_dict()

    @app.get("/v1/projects/{project_id}/annotations")
    def list_annotations(project_id: str, status: Optional[str] = None):
        project = state.get_project(project_id)
        spec = {} if status is None else {"status": status}
        return [a.to_dict() for a in select_annotations(project.annotations, spec)]

    @app.post("/v1/annotations/{annotation_id}/verdict")
    def record_verdict(
        annotation_id: str,
        body: VerdictBody,
        annotator: str = Header("anonymous", alias="X-Annotator-Id"),
    ):
        project, annotation = state.find_annotation(annotation_id)
        if body.verdict == "Accept":
            event = AnnotationEvent.human_accept(annotator)
        elif body.verdict == "Correct":
            if not (body.label and body.label.strip()):
                raise EmptyLabelError("Correct verdict needs a replacement label")
            event = AnnotationEvent.human_correct(body.label, annotator)
        elif body.verdict == "Flag":
            event = AnnotationEvent.flag(body.reason or "", Actor.human(annotator))
        else:
            raise InvalidRequestError(f"unknown verdict {body.verdict!r}")
        with state.writer(project.id):
            updated = project.record_event(annotation_id, event)
            state.persist(project)
        return updated.to_dict()

    @app.post("/v1/projects/{project_id}/label-jobs", status_code=202)
    def submit_label_job(project_id: str, body: LabelJobBody):
        project = state.get_project(project_id)
        if state.provider is None:
            raise InvalidRequestError("service has no label provider configured")

        def run(selection) -> List[ItemOutcome]:
            outcomes = label_batch(project.config, selection, project.images, state.provider)
            adjusted: List[ItemOutcome] = []
            with state.writer(project_id):
                for outcome in outcomes:
                    if not outcome.ok:
                        adjusted.append(outcome)
                        continue
                    try:
                        project.record_event(
                            outcome.annotation_id, outcome.annotation.history[-1]
                        )
                        adjusted.append(outcome)
                    except (IllegalTransitionError, ValueError) as exc:
                        # a human verdict landed first; it wins
                        adjusted.append(
                            ItemOutcome(outcome.annotation_id, error=f"Conflict: {exc}")
                        )
                state.persist(project)
            return adjusted

        job = state.runner.submit(
            project_id,
            body.filter,
            body.idempotency_key,
            select=lambda spec: select_annotations(project.annotations, spec),
            run=run,
        )
        return job.to_dict()

    @app.get("/v1/label-jobs/{job_id}")
    def get_label_job(job_id: str):
        job = state.runner.get(job_id)
        if job is None:
            raise UnknownAnnotationError(f"unknown job {job_id}")
        return job.to_dict()

    @app.get("/v1/projects/{project_id}/stats")
    def project_stats(project_id: str, policy: str = "base"):
        project = state.get_project(project_id)
        try:
            match_policy = MatchPolicy(policy)
        except ValueError:
            valid = ", ".join(p.value for p in MatchPolicy)
            raise InvalidRequestError(f"unknown policy {policy!r}; expected one of: {valid}")
        annotations = list(project.annotations.values())
        counts = {status.value: 0 for status in AnnotationStatus}
        for annotation in annotations:
            counts[annotation.status.value] += 1
        accuracy = None
        if project.truth:
            try:
                report, _ = evaluate_annotations(
                    annotations, project.truth, match_policy, project.taxonomy
                )
                accuracy = report.to_dict()
            except EmptyEvaluationError:
                accuracy = None
        return {
            "counts": {"total": len(annotations), **counts},
            "agreement": agreement_stats(annotations).to_dict(),
            "accuracy": accuracy,
            "cost_inputs": {
                "n_items": len(annotations),
                "n_ai_labeled": sum(1 for a in annotations if a.ai_label is not None),
                "n_reviewed": counts["Verified"] + counts["Corrected"],
            },
        }

    @app.get("/v1/projects/{project_id}/export")
    def export_project(project_id: str, level: str = "fine", status: Optional[str] = None):
        project = state.get_project(project_id)
        if status is None:
            include = None
        else:
            try:
                include = [AnnotationStatus(part) for part in status.split(",") if part]
            except ValueError as exc:
                raise InvalidRequestError(str(exc))
        if include is None:
            document = export_coco(project, category_level=level)
        else:
            document = export_coco(project, include=include, category_level=level)
        return document

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
