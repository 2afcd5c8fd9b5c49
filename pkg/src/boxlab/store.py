"""Durable project persistence and COCO-style interchange.

A project root is a human-diffable directory:

    project.manifest    JSON: identity, task config, image records, checksums
    annotations.log     JSONL event log (authoritative for annotations)
    taxonomy.cfg        INI label taxonomy
    truth.tab           TSV ground-truth side-table, annotation_id -> label
    images/             raw image bytes, content-addressed <sha256>.<ext>

Saving writes every collection file via temp-file-plus-rename and writes the
manifest (which carries the collections' checksums) last, so a crashed save
is detected at load time rather than silently half-applied. The manifest is
the commit point. A lock file serializes writers; readers do not lock.
"""

from __future__ import annotations

import hashlib
import json
import os
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from filelock import FileLock

from .core import (
    Actor,
    Annotation,
    AnnotationEvent,
    AnnotationStatus,
    BoundingBox,
    EventKind,
    Region,
    apply_event,
    create_annotation,
    utcnow,
)
from .errors import (
    CorruptProjectError,
    DanglingReferenceError,
    InvalidBoxError,
    OutOfBoundsError,
    ProjectIOError,
    UnknownAnnotationError,
    UnlabeledInExportError,
    ZeroAreaError,
)
from .images import ImageRecord, ImageStore, content_hash_of
from .labels import parse_label_text
from .pipeline import ItemOutcome, TaskConfig
from .taxonomy import EMPTY_TAXONOMY, Taxonomy, basic_normalize

MANIFEST_NAME = "project.manifest"
LOG_NAME = "annotations.log"
TAXONOMY_NAME = "taxonomy.cfg"
TRUTH_NAME = "truth.tab"
IMAGES_DIR = "images"
LOCK_NAME = ".writer.lock"

EXPORT_DEFAULT_STATUSES = (AnnotationStatus.VERIFIED, AnnotationStatus.CORRECTED)


@dataclass
class Project:
    """A named annotation workspace: images, annotations, config, truth."""

    id: str
    name: str
    images: ImageStore
    annotations: Dict[str, Annotation]
    config: TaskConfig
    taxonomy: Taxonomy
    truth: Dict[str, str]
    created_at: datetime
    log: List[dict] = field(default_factory=list, compare=False, repr=False)

    @classmethod
    def new(
        cls,
        name: str,
        config: Optional[TaskConfig] = None,
        taxonomy: Optional[Taxonomy] = None,
    ) -> "Project":
        return cls(
            id=uuid.uuid4().hex,
            name=name,
            images=ImageStore(),
            annotations={},
            config=config or TaskConfig(),
            taxonomy=taxonomy if taxonomy is not None else EMPTY_TAXONOMY,
            truth={},
            created_at=utcnow(),
        )

    # -- mutations (every annotation change goes through the log) ---------

    def add_image(self, data: bytes, source_name: str) -> ImageRecord:
        return self.images.ingest_image(data, source_name)

    def create_box(
        self,
        image_id: str,
        box: Optional[BoundingBox] = None,
        actor: Optional[Actor] = None,
        timestamp: Optional[datetime] = None,
        annotation_id: Optional[str] = None,
    ) -> Annotation:
        """Create a BoxDrawn annotation (whole-image when box is None)."""
        record = self.images.get(image_id)
        if record is None:
            raise DanglingReferenceError(f"unknown image id {image_id}")
        annotation = create_annotation(
            annotation_id or uuid.uuid4().hex,
            image_id,
            record.width,
            record.height,
            box=box,
            actor=actor,
            timestamp=timestamp,
        )
        self.annotations[annotation.id] = annotation
        self.log.append(
            {
                "type": "create",
                "annotation_id": annotation.id,
                "image_id": annotation.image_id,
                "region": annotation.region.to_dict(),
                "event": annotation.history[0].to_dict(),
            }
        )
        return annotation

    def record_event(self, annotation_id: str, event: AnnotationEvent) -> Annotation:
        """Apply one lifecycle event and append it to the log."""
        current = self.annotations.get(annotation_id)
        if current is None:
            raise UnknownAnnotationError(f"unknown annotation id {annotation_id}")
        updated = apply_event(current, event)
        self.annotations[annotation_id] = updated
        self.log.append(
            {"type": "event", "annotation_id": annotation_id, "event": event.to_dict()}
        )
        return updated

    def commit_outcomes(self, outcomes: Sequence[ItemOutcome]) -> int:
        """Fold successful labeling outcomes back into the project.

        Each success carries exactly one new trailing event; failures are
        skipped. Returns the number of annotations updated.
        """
        applied = 0
        for outcome in outcomes:
            if not outcome.ok:
                continue
            event = outcome.annotation.history[-1]
            self.record_event(outcome.annotation_id, event)
            applied += 1
        return applied

    def get_annotation(self, annotation_id: str) -> Annotation:
        annotation = self.annotations.get(annotation_id)
        if annotation is None:
            raise UnknownAnnotationError(f"unknown annotation id {annotation_id}")
        return annotation

    def annotations_for(self, image_id: str) -> List[Annotation]:
        return [a for a in self.annotations.values() if a.image_id == image_id]

    def set_truth(self, annotation_id: str, label: str) -> None:
        if annotation_id not in self.annotations:
            raise UnknownAnnotationError(f"unknown annotation id {annotation_id}")
        self.truth[annotation_id] = label


# -- on-disk encoding ------------------------------------------------------


def _dump_line(entry: dict) -> str:
    return json.dumps(entry, sort_keys=True)


def _log_text(project: Project) -> str:
    return "".join(_dump_line(entry) + "\n" for entry in project.log)


def _truth_text(project: Project) -> str:
    rows = sorted(project.truth.items())
    return "".join(f"{key}\t{value}\n" for key, value in rows)


def _manifest_text(project: Project, checksums: Dict[str, str]) -> str:
    manifest = {
        "version": 1,
        "id": project.id,
        "name": project.name,
        "created_at": project.created_at.isoformat(),
        "config": project.config.to_dict(),
        "images": [
            record.to_dict()
            for record in sorted(project.images.records(), key=lambda r: r.content_hash)
        ],
        "files": checksums,
    }
    return json.dumps(manifest, sort_keys=True, indent=2) + "\n"


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def save(project: Project, root) -> None:
    """Persist the project under ``root`` (created if needed).

    Collection files land first, the checksummed manifest last, each via
    write-temp-then-rename; an interrupted save therefore never passes
    load's checksum verification. Byte-stable: saving an unchanged project
    twice produces identical files.
    """
    root = Path(root)
    try:
        root.mkdir(parents=True, exist_ok=True)
        (root / IMAGES_DIR).mkdir(exist_ok=True)
        with FileLock(str(root / LOCK_NAME), timeout=10):
            for record in project.images.records():
                name = f"{record.content_hash}.{record.format}"
                target = root / IMAGES_DIR / name
                if not target.exists():
                    _write_atomic(target, project.images.raw_bytes(record.id))

            payloads = {
                LOG_NAME: _log_text(project).encode("utf-8"),
                TAXONOMY_NAME: project.taxonomy.to_text().encode("utf-8"),
                TRUTH_NAME: _truth_text(project).encode("utf-8"),
            }
            checksums = {}
            for name, data in payloads.items():
                _write_atomic(root / name, data)
                checksums[name] = hashlib.sha256(data).hexdigest()
            _write_atomic(root / MANIFEST_NAME, _manifest_text(project, checksums).encode("utf-8"))
    except OSError as exc:
        raise ProjectIOError(f"cannot save project to {root}: {exc}") from exc


def _read_file(root: Path, name: str) -> bytes:
    path = root / name
    try:
        return path.read_bytes()
    except FileNotFoundError:
        raise CorruptProjectError(f"missing file {name}", file_name=name)
    except OSError as exc:
        raise ProjectIOError(f"cannot read {path}: {exc}") from exc


def load(root) -> Project:
    """Load a project directory produced by save, verifying checksums.

    Raises:
        CorruptProjectError: schema or checksum mismatch, naming the file.
        ProjectIOError: unreadable path.
    """
    root = Path(root)
    manifest_bytes = _read_file(root, MANIFEST_NAME)
    try:
        manifest = json.loads(manifest_bytes.decode("utf-8"))
        version = manifest["version"]
        project_id = manifest["id"]
        name = manifest["name"]
        created_at = datetime.fromisoformat(manifest["created_at"])
        config = TaskConfig.from_dict(manifest["config"])
        image_records = [ImageRecord.from_dict(entry) for entry in manifest["images"]]
        checksums = manifest["files"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptProjectError(f"bad manifest: {exc}", file_name=MANIFEST_NAME) from exc
    if version != 1:
        raise CorruptProjectError(f"unsupported version {version}", file_name=MANIFEST_NAME)

    contents: Dict[str, bytes] = {}
    for file_name in (LOG_NAME, TAXONOMY_NAME, TRUTH_NAME):
        data = _read_file(root, file_name)
        expected = checksums.get(file_name)
        if hashlib.sha256(data).hexdigest() != expected:
            raise CorruptProjectError("checksum mismatch", file_name=file_name)
        contents[file_name] = data

    try:
        taxonomy = Taxonomy.parse(contents[TAXONOMY_NAME].decode("utf-8"))
    except Exception as exc:
        raise CorruptProjectError(f"bad taxonomy: {exc}", file_name=TAXONOMY_NAME) from exc

    truth: Dict[str, str] = {}
    for line_no, line in enumerate(contents[TRUTH_NAME].decode("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise CorruptProjectError(f"line {line_no}: expected key<TAB>label", file_name=TRUTH_NAME)
        key, value = line.split("\t", 1)
        truth[key] = value

    images = ImageStore()
    for record in image_records:
        file_name = f"{IMAGES_DIR}/{record.content_hash}.{record.format}"
        data = _read_file(root, file_name)
        if content_hash_of(data) != record.content_hash:
            raise CorruptProjectError("content hash mismatch", file_name=file_name)
        images.add_record(record, data)

    annotations: Dict[str, Annotation] = {}
    log: List[dict] = []
    for line_no, line in enumerate(contents[LOG_NAME].decode("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        where = f"line {line_no}"
        try:
            entry = json.loads(line)
        except ValueError as exc:
            raise CorruptProjectError(f"{where}: {exc}", file_name=LOG_NAME) from exc
        try:
            annotation_id = entry["annotation_id"]
            if entry["type"] == "create":
                event = AnnotationEvent.from_dict(entry["event"])
                if event.kind is not EventKind.BOX_CREATED or annotation_id in annotations:
                    raise ValueError("malformed creation entry")
                annotations[annotation_id] = Annotation(
                    id=annotation_id,
                    image_id=entry["image_id"],
                    region=Region.from_dict(entry["region"]),
                    status=AnnotationStatus.BOX_DRAWN,
                    history=(event,),
                )
            elif entry["type"] == "event":
                event = AnnotationEvent.from_dict(entry["event"])
                annotations[annotation_id] = apply_event(annotations[annotation_id], event)
            else:
                raise ValueError(f"unknown entry type {entry['type']!r}")
        except CorruptProjectError:
            raise
        except Exception as exc:
            raise CorruptProjectError(f"{where}: {exc}", file_name=LOG_NAME) from exc
        log.append(entry)

    for annotation in annotations.values():
        if images.get(annotation.image_id) is None:
            raise CorruptProjectError(
                f"annotation {annotation.id} references unknown image {annotation.image_id}",
                file_name=LOG_NAME,
            )

    return Project(
        id=project_id,
        name=name,
        images=images,
        annotations=annotations,
        config=config,
        taxonomy=taxonomy,
        truth=truth,
        created_at=created_at,
        log=log,
    )


def read_truth_table(path) -> Dict[str, str]:
    """Read a two-column TSV of key<TAB>label (blank lines, # comments ok)."""
    table: Dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise CorruptProjectError(
                f"line {line_no}: expected key<TAB>label", file_name=str(path)
            )
        key, value = line.split("\t", 1)
        table[key.strip()] = value.strip()
    return table


def resolve_truth(project: Project, table: Dict[str, str]) -> Dict[str, str]:
    """Map externally keyed truth rows onto annotation ids.

    Each key is tried as an annotation id, then an image source name, then
    an image content hash; image-keyed rows apply to every annotation on
    that image. Unresolvable keys are ignored (a truth table may cover more
    data than this project holds).
    """
    resolved: Dict[str, str] = {}
    for key, label in table.items():
        if key in project.annotations:
            resolved[key] = label
            continue
        record = project.images.by_source_name(key) or project.images.by_hash(key)
        if record is None:
            continue
        for annotation in project.annotations_for(record.id):
            resolved[annotation.id] = label
    return resolved


# -- COCO-style interchange ------------------------------------------------


def _category_name(annotation: Annotation, level: str) -> str:
    """Export category for one annotation: corrected text wins over AI label."""
    if annotation.status is AnnotationStatus.CORRECTED and annotation.human_label:
        label = parse_label_text(annotation.human_label)
    elif annotation.ai_label is not None:
        label = annotation.ai_label
    else:
        raise UnlabeledInExportError(f"annotation {annotation.id} has no label to export")
    if level == "base":
        return basic_normalize(label.base or label.fine)
    return basic_normalize(label.fine)


def export_coco(
    project: Project,
    include: Sequence[AnnotationStatus] = EXPORT_DEFAULT_STATUSES,
    category_level: str = "fine",
) -> dict:
    """Build a COCO object-detection-subset document from the project.

    Only annotations whose status is in ``include`` are exported (default:
    the human-confirmed ones). Category names are normalized lowercase;
    ids are dense, 1..N in name order. Whole-image annotations export as
    bbox [0, 0, width, height].

    Raises:
        UnlabeledInExportError: an included annotation lacks any label.
    """
    if category_level not in ("base", "fine"):
        raise ValueError("category_level must be 'base' or 'fine'")
    include = set(include)
    picked = sorted(
        (a for a in project.annotations.values() if a.status in include), key=lambda a: a.id
    )

    names = sorted({_category_name(a, category_level) for a in picked})
    category_ids = {name: idx for idx, name in enumerate(names, 1)}

    used_image_ids = {a.image_id for a in picked}
    records = sorted(
        (r for r in project.images.records() if r.id in used_image_ids),
        key=lambda r: r.content_hash,
    )
    image_ids = {record.id: idx for idx, record in enumerate(records, 1)}

    images = [
        {
            "id": image_ids[record.id],
            "file_name": record.source_name,
            "width": record.width,
            "height": record.height,
        }
        for record in records
    ]
    annotations = []
    for idx, annotation in enumerate(picked, 1):
        record = project.images.get(annotation.image_id)
        if annotation.region.is_whole_image:
            bbox = [0, 0, record.width, record.height]
        else:
            box = annotation.region.box
            bbox = [box.x, box.y, box.width, box.height]
        annotations.append(
            {
                "id": idx,
                "image_id": image_ids[annotation.image_id],
                "bbox": bbox,
                "category_id": category_ids[_category_name(annotation, category_level)],
            }
        )
    return {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": category_ids[name], "name": name} for name in names],
    }


def import_boxes(
    document: dict, project: Project, actor: Optional[Actor] = None
) -> List[Annotation]:
    """Create BoxDrawn annotations from a COCO-subset document.

    Document images are matched to already-ingested project images by
    file_name. A bbox spanning the full image canonicalizes to a
    whole-image region. Category names, when present, are recorded in the
    ground-truth side-table (they are hints for evaluation, not labels).

    Raises:
        DanglingReferenceError: unresolved image or category reference.
        InvalidBoxError: zero-area or out-of-bounds bbox, naming the
            document annotation id.
    """
    categories = {entry["id"]: entry["name"] for entry in document.get("categories", [])}
    doc_images: Dict[object, ImageRecord] = {}
    for entry in document.get("images", []):
        record = project.images.by_source_name(entry["file_name"])
        if record is None:
            raise DanglingReferenceError(
                f"image {entry['file_name']!r} is not ingested in this project"
            )
        doc_images[entry["id"]] = record

    created: List[Annotation] = []
    for entry in document.get("annotations", []):
        doc_id = entry.get("id")
        record = doc_images.get(entry.get("image_id"))
        if record is None:
            raise DanglingReferenceError(
                f"annotation {doc_id} references unknown image {entry.get('image_id')}"
            )
        category_id = entry.get("category_id")
        if category_id is not None and category_id not in categories:
            raise DanglingReferenceError(
                f"annotation {doc_id} references unknown category {category_id}"
            )
        try:
            x, y, w, h = (int(v) for v in entry["bbox"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidBoxError(f"annotation {doc_id}: bad bbox: {exc}") from exc
        if [x, y, w, h] == [0, 0, record.width, record.height]:
            box = None  # full-image-sized boxes canonicalize to WholeImage
        else:
            box = BoundingBox(x, y, w, h)
        try:
            annotation = project.create_box(record.id, box=box, actor=actor)
        except (ZeroAreaError, OutOfBoundsError) as exc:
            raise InvalidBoxError(f"annotation {doc_id}: {exc}") from exc
        if category_id is not None:
            project.truth[annotation.id] = basic_normalize(categories[category_id])
        created.append(annotation)
    return created
