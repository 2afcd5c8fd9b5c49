"""Prompt building, provider calls, and applying AI labels to annotations.

The provider behind the pipeline is pluggable: a deterministic mock keyed by
image content hash (fixtures survive re-ingestion), or a live HTTP adapter.
Every request item maps to exactly one annotation; failed items never touch
their annotation, so a batch is per-item atomic.
"""

from __future__ import annotations

import random
import string
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Protocol, Sequence, Tuple

from .core import Annotation, AnnotationEvent, AnnotationStatus, apply_event, utcnow
from .errors import (
    AuthError,
    BoxlabError,
    EmptyBatchError,
    MalformedResponseError,
    ProviderExhaustedError,
    UnresolvedPlaceholderError,
)
from .images import ImageStore, OverlayStyle, crop_region, draw_overlay, to_png_bytes
from .labels import parse_label_text

# Overlay mode submits the image with the box drawn on it, so the prompt can
# point at the visible box. Crop mode submits the cut-out region alone and
# uses this tool's own default wording.
DEFAULT_OVERLAY_PROMPT = "Please tell me what is selected by the bounding box in each image."
DEFAULT_CROP_PROMPT = "Please tell me what is shown in this image region."


class TransientProviderError(BoxlabError):
    """Retryable provider failure: timeout, rate limit, 5xx-class signals."""


class SubmissionMode(str, Enum):
    OVERLAY = "overlay"
    CROP = "crop"


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff: float = 0.5  # seconds; delay is full-jitter exponential

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.base_backoff < 0:
            raise ValueError("base_backoff must be >= 0")


@dataclass(frozen=True)
class TaskConfig:
    prompt_template: str = DEFAULT_OVERLAY_PROMPT
    submission_mode: SubmissionMode = SubmissionMode.OVERLAY
    model_id: str = "mock"
    batch_size: int = 8
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    granularity_target: Optional[int] = None
    prompt_vars: Tuple[Tuple[str, str], ...] = ()
    overlay_style: OverlayStyle = field(default_factory=OverlayStyle)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.granularity_target is not None and self.granularity_target not in (1, 2, 3):
            raise ValueError("granularity_target must be 1, 2, or 3")

    @classmethod
    def for_mode(cls, mode: SubmissionMode, **kwargs) -> "TaskConfig":
        template = DEFAULT_OVERLAY_PROMPT if mode is SubmissionMode.OVERLAY else DEFAULT_CROP_PROMPT
        return cls(prompt_template=template, submission_mode=mode, **kwargs)

    def to_dict(self) -> dict:
        return {
            "prompt_template": self.prompt_template,
            "submission_mode": self.submission_mode.value,
            "model_id": self.model_id,
            "batch_size": self.batch_size,
            "retry": {"max_attempts": self.retry.max_attempts, "base_backoff": self.retry.base_backoff},
            "granularity_target": self.granularity_target,
            "prompt_vars": [list(kv) for kv in self.prompt_vars],
            "overlay_style": self.overlay_style.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TaskConfig":
        return cls(
            prompt_template=data["prompt_template"],
            submission_mode=SubmissionMode(data["submission_mode"]),
            model_id=data["model_id"],
            batch_size=data["batch_size"],
            retry=RetryPolicy(**data["retry"]),
            granularity_target=data.get("granularity_target"),
            prompt_vars=tuple(tuple(kv) for kv in data.get("prompt_vars", [])),
            overlay_style=OverlayStyle.from_dict(data["overlay_style"]),
        )


@dataclass(frozen=True)
class ImagePayload:
    """One submission item: the rendered bitmap plus the source image's hash.

    The hash is the ORIGINAL image's content hash, not the rendered bytes',
    so mock fixtures keyed on ingested files keep working whatever the
    submission mode renders.
    """

    annotation_id: str
    png_bytes: bytes
    source_hash: str
    media_type: str = "image/png"


@dataclass(frozen=True)
class PromptRequest:
    request_id: str
    text: str
    items: Tuple[ImagePayload, ...]

    def __post_init__(self):
        if not self.items:
            raise EmptyBatchError("prompt request needs at least one item")
        ids = [item.annotation_id for item in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("annotation ids in a request must be distinct")


@dataclass(frozen=True)
class RawItemResult:
    """Provider verdict for one request item: text or a classified error."""

    annotation_id: str
    text: Optional[str] = None
    error: Optional[str] = None
    transient: bool = False
    usage: Optional[Tuple[int, int]] = None  # (input_tokens, output_tokens)


@dataclass(frozen=True)
class ResponseItem:
    annotation_id: str
    raw_text: Optional[str] = None
    error: Optional[str] = None
    usage: Optional[Tuple[int, int]] = None


@dataclass(frozen=True)
class ProviderResponse:
    items: Tuple[ResponseItem, ...]
    usage: Tuple[int, int]
    latency: float
    attempts: int


class Provider(Protocol):
    """A single call: (model id, prompt text, image payloads) -> per-item results.

    Implementations raise TransientProviderError for retryable transport
    failures, AuthError for credential rejection, MalformedResponseError for
    undecodable payloads; per-item problems go into RawItemResult.error.
    """

    def complete(
        self, model_id: str, prompt: str, items: Sequence[ImagePayload]
    ) -> List[RawItemResult]:
        ...


class MockProvider:
    """Deterministic provider backed by a content-hash -> response map.

    Fixture file format: UTF-8 text, one record per line,
    ``<content_hash><TAB><response text>``; blank lines and # comments
    ignored.
    """

    def __init__(self, fixtures: Dict[str, str]):
        self.fixtures = dict(fixtures)

    @classmethod
    def from_file(cls, path) -> "MockProvider":
        fixtures: Dict[str, str] = {}
        for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise ValueError(f"{path}:{line_no}: expected <hash><TAB><response>")
            digest, text = line.split("\t", 1)
            fixtures[digest.strip()] = text
        return cls(fixtures)

    def complete(self, model_id, prompt, items):
        prompt_tokens = len(prompt.split())
        results = []
        for item in items:
            text = self.fixtures.get(item.source_hash)
            if text is None:
                results.append(
                    RawItemResult(
                        annotation_id=item.annotation_id,
                        error=f"no fixture for content hash {item.source_hash[:12]}",
                    )
                )
            else:
                results.append(
                    RawItemResult(
                        annotation_id=item.annotation_id,
                        text=text,
                        usage=(prompt_tokens, len(text.split())),
                    )
                )
        return results


class LiveProvider:
    """HTTP adapter for an OpenAI-compatible chat completions endpoint.

    Credentials come from the environment only: BOXLAB_API_KEY (required)
    and BOXLAB_API_BASE (optional, defaults to the OpenAI API). One HTTP
    call is made per request item; transient transport failures and
    429/5xx responses are marked retryable per item.
    """

    DEFAULT_BASE = "https://api.openai.com/v1"

    def __init__(self, client=None, timeout: float = 60.0):
        import os

        self.api_key = os.environ.get("BOXLAB_API_KEY", "")
        self.base_url = os.environ.get("BOXLAB_API_BASE", self.DEFAULT_BASE).rstrip("/")
        if client is None:
            import httpx

            client = httpx.Client(timeout=timeout)
        self._client = client

    def complete(self, model_id, prompt, items):
        import base64

        import httpx

        if not self.api_key:
            raise AuthError("BOXLAB_API_KEY is not set")
        results = []
        for item in items:
            encoded = base64.b64encode(item.png_bytes).decode("ascii")
            body = {
                "model": model_id,
                "messages": [
                    {
                        "role": "user",
                        "content": [
                            {"type": "text", "text": prompt},
                            {
                                "type": "image_url",
                                "image_url": {"url": f"data:{item.media_type};base64,{encoded}"},
                            },
                        ],
                    }
                ],
            }
            try:
                response = self._client.post(
                    f"{self.base_url}/chat/completions",
                    json=body,
                    headers={"Authorization": f"Bearer {self.api_key}"},
                )
            except httpx.TimeoutException as exc:
                results.append(
                    RawItemResult(item.annotation_id, error=f"timeout: {exc}", transient=True)
                )
                continue
            except httpx.TransportError as exc:
                results.append(
                    RawItemResult(item.annotation_id, error=f"transport: {exc}", transient=True)
                )
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"provider rejected credentials (HTTP {response.status_code})")
            if response.status_code == 429 or response.status_code >= 500:
                results.append(
                    RawItemResult(
                        item.annotation_id,
                        error=f"HTTP {response.status_code}",
                        transient=True,
                    )
                )
                continue
            if response.status_code != 200:
                results.append(
                    RawItemResult(item.annotation_id, error=f"HTTP {response.status_code}")
                )
                continue
            try:
                text, usage = self._parse_body(response)
            except MalformedResponseError as exc:
                results.append(RawItemResult(item.annotation_id, error=f"MalformedResponse: {exc}"))
                continue
            results.append(RawItemResult(item.annotation_id, text=text, usage=usage))
        return results

    @staticmethod
    def _parse_body(response) -> Tuple[str, Tuple[int, int]]:
        try:
            data = response.json()
            text = data["choices"][0]["message"]["content"]
            usage = data.get("usage", {})
            tokens = (int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0)))
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"undecodable provider payload: {exc}") from exc
        if not isinstance(text, str):
            raise MalformedResponseError("response content is not text")
        return text, tokens


def resolve_template(template: str, variables: Dict[str, str]) -> str:
    """Substitute {name} placeholders; unknown names raise."""
    try:
        return string.Formatter().vformat(template, (), _StrictVars(variables))
    except KeyError as exc:
        raise UnresolvedPlaceholderError(f"no value for placeholder {exc.args[0]!r}") from exc


class _StrictVars(dict):
    def __missing__(self, key):
        raise KeyError(key)


def build_prompt(config: TaskConfig, items: Sequence[ImagePayload]) -> PromptRequest:
    """Resolve the prompt template into a request over the given items.

    Raises:
        EmptyBatchError: no items.
        UnresolvedPlaceholderError: template references an unknown variable.
    """
    if not items:
        raise EmptyBatchError("cannot build a prompt over zero items")
    if len(items) > config.batch_size:
        raise ValueError(f"{len(items)} items exceed batch_size {config.batch_size}")
    variables = dict(config.prompt_vars)
    if config.granularity_target is not None:
        variables.setdefault("granularity_target", str(config.granularity_target))
    text = resolve_template(config.prompt_template, variables)
    return PromptRequest(request_id=uuid.uuid4().hex, text=text, items=tuple(items))


def request_labels(
    provider: Provider,
    request: PromptRequest,
    config: TaskConfig,
    sleep: Callable[[float], None] = time.sleep,
    rng: Optional[random.Random] = None,
) -> ProviderResponse:
    """Call the provider with retries until every item has a verdict.

    Transient failures (whole-call or per-item) are retried with full-jitter
    exponential backoff, base * 2^(attempt-1); only still-pending items are
    resubmitted. AuthError aborts immediately. Items that are still failing
    transiently after max_attempts come back as ProviderExhausted item
    errors.
    """
    rng = rng or random
    policy = config.retry
    pending: Dict[str, ImagePayload] = {item.annotation_id: item for item in request.items}
    final: Dict[str, ResponseItem] = {}
    attempts = 0
    any_call_landed = False
    started = time.monotonic()

    while pending and attempts < policy.max_attempts:
        attempts += 1
        try:
            results = provider.complete(config.model_id, request.text, list(pending.values()))
        except TransientProviderError:
            results = []  # whole call failed; everything stays pending
        except AuthError:
            raise
        else:
            any_call_landed = True
            for result in results:
                if result.annotation_id not in pending:
                    continue  # defensive: ignore strays
                if result.error is not None and result.transient:
                    continue  # stays pending for the next attempt
                final[result.annotation_id] = ResponseItem(
                    annotation_id=result.annotation_id,
                    raw_text=result.text,
                    error=result.error,
                    usage=result.usage,
                )
                del pending[result.annotation_id]
        if pending and attempts < policy.max_attempts:
            sleep(rng.uniform(0, policy.base_backoff * (2 ** (attempts - 1))))

    if pending and not any_call_landed:
        raise ProviderExhaustedError(f"provider unreachable for {attempts} attempts")
    for annotation_id in pending:
        final[annotation_id] = ResponseItem(
            annotation_id=annotation_id,
            error=f"ProviderExhausted: still transient after {attempts} attempts",
        )

    items = tuple(final[item.annotation_id] for item in request.items)
    usage_in = sum(item.usage[0] for item in items if item.usage)
    usage_out = sum(item.usage[1] for item in items if item.usage)
    return ProviderResponse(
        items=items,
        usage=(usage_in, usage_out),
        latency=time.monotonic() - started,
        attempts=attempts,
    )


@dataclass(frozen=True)
class ItemOutcome:
    annotation_id: str
    annotation: Optional[Annotation] = None  # updated annotation on success
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.annotation is not None

    def to_dict(self) -> dict:
        return {
            "annotation_id": self.annotation_id,
            "ok": self.ok,
            "error": self.error,
            "annotation": self.annotation.to_dict() if self.annotation else None,
        }


def render_payload(
    config: TaskConfig, annotation: Annotation, images: ImageStore
) -> ImagePayload:
    """Render one annotation for submission (overlay or crop per config).

    Whole-image annotations submit the full image in either mode.
    """
    record = images.get(annotation.image_id)
    if record is None:
        raise KeyError(f"annotation {annotation.id} references unknown image {annotation.image_id}")
    bitmap = images.decode(record.id)
    if config.submission_mode is SubmissionMode.CROP:
        rendered = crop_region(bitmap, annotation.region)
    else:
        boxes = [] if annotation.region.is_whole_image else [annotation.region.box]
        rendered = draw_overlay(bitmap, boxes, config.overlay_style)
    return ImagePayload(
        annotation_id=annotation.id,
        png_bytes=to_png_bytes(rendered),
        source_hash=record.content_hash,
    )


def label_batch(
    config: TaskConfig,
    annotations: Sequence[Annotation],
    images: ImageStore,
    provider: Provider,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], datetime] = utcnow,
    rng: Optional[random.Random] = None,
) -> List[ItemOutcome]:
    """Label a batch of annotations, one request item per annotation.

    Annotations must be in status BoxDrawn (or AiLabeled, for relabeling).
    Each outcome is either the updated AiLabeled annotation or an item error
    that left the annotation untouched; only AuthError aborts the batch.
    """
    for ann in annotations:
        if ann.status not in (AnnotationStatus.BOX_DRAWN, AnnotationStatus.AI_LABELED):
            raise ValueError(f"annotation {ann.id} is {ann.status.value}; not labelable")

    by_id = {ann.id: ann for ann in annotations}
    outcomes: Dict[str, ItemOutcome] = {}
    applied: set = set()

    for start in range(0, len(annotations), config.batch_size):
        chunk = annotations[start : start + config.batch_size]
        payloads = []
        for ann in chunk:
            try:
                payloads.append(render_payload(config, ann, images))
            except (BoxlabError, KeyError) as exc:
                outcomes[ann.id] = ItemOutcome(ann.id, error=f"{type(exc).__name__}: {exc}")
        if not payloads:
            continue
        request = build_prompt(config, payloads)
        try:
            response = request_labels(provider, request, config, sleep=sleep, rng=rng)
        except ProviderExhaustedError as exc:
            for payload in payloads:
                outcomes[payload.annotation_id] = ItemOutcome(
                    payload.annotation_id, error=f"ProviderExhausted: {exc}"
                )
            continue
        for item in response.items:
            if item.error is not None:
                outcomes[item.annotation_id] = ItemOutcome(item.annotation_id, error=item.error)
                continue
            key = (request.request_id, item.annotation_id)
            if key in applied:
                continue
            applied.add(key)
            try:
                label = parse_label_text(item.raw_text)
                event = AnnotationEvent.ai_label_applied(label, config.model_id, clock())
                updated = apply_event(by_id[item.annotation_id], event)
            except BoxlabError as exc:
                outcomes[item.annotation_id] = ItemOutcome(
                    item.annotation_id, error=f"{type(exc).__name__}: {exc}"
                )
                continue
            outcomes[item.annotation_id] = ItemOutcome(item.annotation_id, annotation=updated)

    return [outcomes[ann.id] for ann in annotations]
