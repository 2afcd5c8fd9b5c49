"""Domain model and annotation lifecycle.

Annotations are immutable values; every operation returns a new value and
the full event history rides along, so any annotation can be rebuilt by
replaying its history from the first event. Mutation (ids, persistence,
locking) lives in the project store, not here.

Lifecycle:

    BoxDrawn --AiLabelApplied--> AiLabeled --HumanAccept--> Verified
                                     |     --HumanCorrect--> Corrected
                                     +--AiLabelApplied--> AiLabeled (relabel)
    any state --Flag--> Flagged (terminal parking state)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Optional, Sequence, Tuple

from .errors import IllegalTransitionError, OutOfBoundsError, ZeroAreaError
from .labels import ParsedLabel


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle, origin top-left.

    Values are plain data here; :func:`validate_box` enforces the geometric
    constraints against an image extent.
    """

    x: int
    y: int
    width: int
    height: int

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, data: dict) -> "BoundingBox":
        return cls(x=data["x"], y=data["y"], width=data["width"], height=data["height"])


@dataclass(frozen=True)
class Region:
    """Either a bounding box or the whole image (no box drawn)."""

    box: Optional[BoundingBox] = None

    @classmethod
    def whole_image(cls) -> "Region":
        return cls(box=None)

    @classmethod
    def of_box(cls, box: BoundingBox) -> "Region":
        return cls(box=box)

    @property
    def is_whole_image(self) -> bool:
        return self.box is None

    def to_dict(self) -> dict:
        if self.box is None:
            return {"kind": "WholeImage"}
        return {"kind": "Box", **self.box.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "Region":
        if data["kind"] == "WholeImage":
            return cls.whole_image()
        return cls.of_box(BoundingBox.from_dict(data))


class AnnotationStatus(str, Enum):
    BOX_DRAWN = "BoxDrawn"
    AI_LABELED = "AiLabeled"
    VERIFIED = "Verified"
    CORRECTED = "Corrected"
    FLAGGED = "Flagged"


class EventKind(str, Enum):
    BOX_CREATED = "BoxCreated"
    AI_LABEL_APPLIED = "AiLabelApplied"
    HUMAN_ACCEPT = "HumanAccept"
    HUMAN_CORRECT = "HumanCorrect"
    FLAG = "Flag"


class ActorKind(str, Enum):
    HUMAN = "Human"
    AI = "Ai"


@dataclass(frozen=True)
class Actor:
    kind: ActorKind
    id: str

    @classmethod
    def human(cls, annotator_id: str) -> "Actor":
        return cls(ActorKind.HUMAN, annotator_id)

    @classmethod
    def ai(cls, model_id: str) -> "Actor":
        return cls(ActorKind.AI, model_id)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "id": self.id}

    @classmethod
    def from_dict(cls, data: dict) -> "Actor":
        return cls(ActorKind(data["kind"]), data["id"])


@dataclass(frozen=True)
class AnnotationEvent:
    """One step in an annotation's history.

    ``label`` is set only for AiLabelApplied; ``text`` carries the
    replacement label for HumanCorrect or the reason for Flag.
    """

    kind: EventKind
    actor: Actor
    timestamp: datetime
    label: Optional[ParsedLabel] = None
    text: Optional[str] = None

    def __post_init__(self):
        if self.kind is EventKind.AI_LABEL_APPLIED:
            if self.actor.kind is not ActorKind.AI:
                raise ValueError("AiLabelApplied events must have an Ai actor")
            if self.label is None:
                raise ValueError("AiLabelApplied events must carry a label")
        if self.kind in (EventKind.HUMAN_ACCEPT, EventKind.HUMAN_CORRECT):
            if self.actor.kind is not ActorKind.HUMAN:
                raise ValueError(f"{self.kind.value} events must have a Human actor")
        if self.kind is EventKind.HUMAN_CORRECT and not (self.text and self.text.strip()):
            raise ValueError("HumanCorrect events must carry a replacement label")
        if self.kind is EventKind.FLAG and self.text is None:
            raise ValueError("Flag events must carry a reason")

    @classmethod
    def box_created(cls, actor: Actor, timestamp: Optional[datetime] = None) -> "AnnotationEvent":
        return cls(EventKind.BOX_CREATED, actor, timestamp or utcnow())

    @classmethod
    def ai_label_applied(
        cls, label: ParsedLabel, model_id: str, timestamp: Optional[datetime] = None
    ) -> "AnnotationEvent":
        return cls(EventKind.AI_LABEL_APPLIED, Actor.ai(model_id), timestamp or utcnow(), label=label)

    @classmethod
    def human_accept(cls, annotator_id: str, timestamp: Optional[datetime] = None) -> "AnnotationEvent":
        return cls(EventKind.HUMAN_ACCEPT, Actor.human(annotator_id), timestamp or utcnow())

    @classmethod
    def human_correct(
        cls, label_text: str, annotator_id: str, timestamp: Optional[datetime] = None
    ) -> "AnnotationEvent":
        return cls(EventKind.HUMAN_CORRECT, Actor.human(annotator_id), timestamp or utcnow(), text=label_text)

    @classmethod
    def flag(cls, reason: str, actor: Actor, timestamp: Optional[datetime] = None) -> "AnnotationEvent":
        return cls(EventKind.FLAG, actor, timestamp or utcnow(), text=reason)

    def to_dict(self) -> dict:
        data = {
            "kind": self.kind.value,
            "actor": self.actor.to_dict(),
            "ts": self.timestamp.isoformat(),
        }
        if self.label is not None:
            data["label"] = self.label.to_dict()
        if self.text is not None:
            data["text"] = self.text
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "AnnotationEvent":
        label = data.get("label")
        return cls(
            kind=EventKind(data["kind"]),
            actor=Actor.from_dict(data["actor"]),
            timestamp=datetime.fromisoformat(data["ts"]),
            label=ParsedLabel.from_dict(label) if label is not None else None,
            text=data.get("text"),
        )


@dataclass(frozen=True)
class Annotation:
    """A single boxed (or whole-image) region with its lifecycle state."""

    id: str
    image_id: str
    region: Region
    status: AnnotationStatus = AnnotationStatus.BOX_DRAWN
    ai_label: Optional[ParsedLabel] = None
    human_label: Optional[str] = None
    history: Tuple[AnnotationEvent, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "image_id": self.image_id,
            "region": self.region.to_dict(),
            "status": self.status.value,
            "ai_label": self.ai_label.to_dict() if self.ai_label else None,
            "human_label": self.human_label,
            "history": [e.to_dict() for e in self.history],
        }


def validate_box(box: BoundingBox, image_width: int, image_height: int) -> None:
    """Check a box against the image extent; raise if invalid.

    Raises:
        ZeroAreaError: width or height is not strictly positive.
        OutOfBoundsError: box extends beyond ``image_width`` x ``image_height``.
    """
    if image_width <= 0 or image_height <= 0:
        raise ValueError("image dimensions must be positive")
    if box.width <= 0 or box.height <= 0:
        raise ZeroAreaError(f"box {box.width}x{box.height} has no area")
    if box.x < 0 or box.y < 0 or box.x + box.width > image_width or box.y + box.height > image_height:
        raise OutOfBoundsError(
            f"box ({box.x},{box.y},{box.width},{box.height}) exceeds image "
            f"{image_width}x{image_height}"
        )


def create_annotation(
    annotation_id: str,
    image_id: str,
    image_width: int,
    image_height: int,
    box: Optional[BoundingBox] = None,
    actor: Optional[Actor] = None,
    timestamp: Optional[datetime] = None,
) -> Annotation:
    """Create a fresh annotation in status BoxDrawn.

    With no box the region is the whole image and the labeling pipeline will
    submit the full image. With a box, the box is validated first.
    """
    if box is not None:
        validate_box(box, image_width, image_height)
        region = Region.of_box(box)
    else:
        region = Region.whole_image()
    created = AnnotationEvent.box_created(actor or Actor.human("unknown"), timestamp)
    return Annotation(
        id=annotation_id,
        image_id=image_id,
        region=region,
        status=AnnotationStatus.BOX_DRAWN,
        history=(created,),
    )


# (status, event kind) -> new status; relabel keeps AiLabeled
_TRANSITIONS = {
    (AnnotationStatus.BOX_DRAWN, EventKind.AI_LABEL_APPLIED): AnnotationStatus.AI_LABELED,
    (AnnotationStatus.AI_LABELED, EventKind.AI_LABEL_APPLIED): AnnotationStatus.AI_LABELED,
    (AnnotationStatus.AI_LABELED, EventKind.HUMAN_ACCEPT): AnnotationStatus.VERIFIED,
    (AnnotationStatus.AI_LABELED, EventKind.HUMAN_CORRECT): AnnotationStatus.CORRECTED,
}


def apply_event(annotation: Annotation, event: AnnotationEvent) -> Annotation:
    """Apply one event, returning the updated annotation.

    Only the legal lifecycle transitions are accepted; anything else raises
    IllegalTransitionError carrying the offending (status, event kind) pair
    and leaves the input untouched. Flag is accepted from any status.
    """
    if annotation.history and event.timestamp < annotation.history[-1].timestamp:
        raise ValueError("event timestamp precedes history tail")

    if event.kind is EventKind.FLAG:
        new_status = AnnotationStatus.FLAGGED
    else:
        new_status = _TRANSITIONS.get((annotation.status, event.kind))
        if new_status is None:
            raise IllegalTransitionError(annotation.status, event.kind)

    updates: dict = {"status": new_status, "history": annotation.history + (event,)}
    if event.kind is EventKind.AI_LABEL_APPLIED:
        updates["ai_label"] = event.label
    elif event.kind is EventKind.HUMAN_CORRECT:
        updates["human_label"] = event.text
    return replace(annotation, **updates)


def replay(
    annotation_id: str,
    image_id: str,
    region: Region,
    events: Sequence[AnnotationEvent],
) -> Annotation:
    """Rebuild an annotation by replaying its history from BoxCreated.

    The event-sourcing consistency contract: for any annotation produced by
    create_annotation/apply_event, ``replay(..., a.history)`` equals ``a``.
    """
    if not events or events[0].kind is not EventKind.BOX_CREATED:
        raise ValueError("history must start with a BoxCreated event")
    annotation = Annotation(
        id=annotation_id,
        image_id=image_id,
        region=region,
        status=AnnotationStatus.BOX_DRAWN,
        history=(events[0],),
    )
    for event in events[1:]:
        annotation = apply_event(annotation, event)
    return annotation
