"""Image ingestion, region extraction, and box-overlay rendering.

Stored bytes are always the originals; crops and overlays are derived on
demand. Records are deduplicated by a sha256 digest of the raw bytes, so
re-ingesting the same file is a no-op that returns the first record.
"""

from __future__ import annotations

import hashlib
import io
import threading
import uuid
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from PIL import Image, ImageDraw, UnidentifiedImageError

from .core import BoundingBox, Region, validate_box
from .errors import DecodeError

RGBA = Tuple[int, int, int, int]


@dataclass(frozen=True)
class ImageRecord:
    id: str
    source_name: str
    width: int
    height: int
    content_hash: str
    format: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source_name": self.source_name,
            "width": self.width,
            "height": self.height,
            "content_hash": self.content_hash,
            "format": self.format,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ImageRecord":
        return cls(
            id=data["id"],
            source_name=data["source_name"],
            width=data["width"],
            height=data["height"],
            content_hash=data["content_hash"],
            format=data["format"],
        )


@dataclass(frozen=True)
class OverlayStyle:
    stroke_color: RGBA = (255, 0, 0, 255)
    stroke_width: int = 2

    def __post_init__(self):
        if self.stroke_width < 1:
            raise ValueError("stroke_width must be >= 1")

    def to_dict(self) -> dict:
        return {"stroke_color": list(self.stroke_color), "stroke_width": self.stroke_width}

    @classmethod
    def from_dict(cls, data: dict) -> "OverlayStyle":
        return cls(tuple(data["stroke_color"]), data["stroke_width"])


def content_hash_of(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def decode_image(data: bytes) -> Image.Image:
    """Decode raw bytes into a PIL image, or raise DecodeError."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
        return img
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image bytes: {exc}") from exc


def crop_region(image: Image.Image, region: Region) -> Image.Image:
    """Extract a region: the exact box crop, or a copy of the whole image."""
    if region.is_whole_image:
        return image.copy()
    box = region.box
    validate_box(box, image.width, image.height)
    return image.crop((box.x, box.y, box.x + box.width, box.y + box.height))


def draw_overlay(
    image: Image.Image, boxes: Sequence[BoundingBox], style: Optional[OverlayStyle] = None
) -> Image.Image:
    """Return a copy with rectangle outlines drawn at each box.

    The stroke is drawn inward from the box edge (stroke_width bands), so
    output dimensions always equal input dimensions and pixels strictly
    inside the outline are untouched. Zero boxes returns an exact copy.
    """
    if not boxes:
        return image.copy()
    style = style or OverlayStyle()
    for box in boxes:
        validate_box(box, image.width, image.height)

    r, g, b, a = style.stroke_color
    if a < 255:
        base = image.convert("RGBA")
        layer = Image.new("RGBA", base.size, (0, 0, 0, 0))
        _draw_outlines(ImageDraw.Draw(layer), boxes, (r, g, b, a), style.stroke_width)
        return Image.alpha_composite(base, layer)

    out = image.copy() if image.mode in ("RGB", "RGBA") else image.convert("RGB")
    color = (r, g, b) if out.mode == "RGB" else (r, g, b, 255)
    _draw_outlines(ImageDraw.Draw(out), boxes, color, style.stroke_width)
    return out


def _draw_outlines(draw: ImageDraw.ImageDraw, boxes, color, width: int) -> None:
    # four filled bands per box; inclusive pixel coordinates
    for box in boxes:
        x0, y0 = box.x, box.y
        x1, y1 = box.x + box.width - 1, box.y + box.height - 1
        draw.rectangle([x0, y0, x1, min(y0 + width - 1, y1)], fill=color)
        draw.rectangle([x0, max(y1 - width + 1, y0), x1, y1], fill=color)
        draw.rectangle([x0, y0, min(x0 + width - 1, x1), y1], fill=color)
        draw.rectangle([max(x1 - width + 1, x0), y0, x1, y1], fill=color)


def to_png_bytes(image: Image.Image) -> bytes:
    """Encode a bitmap losslessly for provider submission."""
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()


class ImageStore:
    """In-memory image collection, content-addressed by sha256.

    Ingestion serializes on the hash index so concurrent identical ingests
    cannot create duplicate records; reads need no lock.
    """

    def __init__(self):
        self._records: Dict[str, ImageRecord] = {}
        self._bytes: Dict[str, bytes] = {}
        self._hash_to_id: Dict[str, str] = {}
        self._lock = threading.Lock()

    def ingest_image(self, data: bytes, source_name: str) -> ImageRecord:
        """Decode, dedupe, and store raw image bytes.

        Raises:
            DecodeError: bytes are not a supported raster format.
        """
        digest = content_hash_of(data)
        with self._lock:
            existing = self._hash_to_id.get(digest)
            if existing is not None:
                return self._records[existing]
            img = decode_image(data)
            fmt = (img.format or "png").lower()
            record = ImageRecord(
                id=uuid.uuid4().hex,
                source_name=source_name,
                width=img.width,
                height=img.height,
                content_hash=digest,
                format=fmt,
            )
            self._records[record.id] = record
            self._bytes[digest] = data
            self._hash_to_id[digest] = record.id
            return record

    def add_record(self, record: ImageRecord, data: bytes) -> None:
        """Install a previously persisted record (used by project load)."""
        with self._lock:
            self._records[record.id] = record
            self._bytes[record.content_hash] = data
            self._hash_to_id[record.content_hash] = record.id

    def get(self, image_id: str) -> Optional[ImageRecord]:
        return self._records.get(image_id)

    def by_hash(self, digest: str) -> Optional[ImageRecord]:
        image_id = self._hash_to_id.get(digest)
        return self._records.get(image_id) if image_id else None

    def by_source_name(self, source_name: str) -> Optional[ImageRecord]:
        for record in self._records.values():
            if record.source_name == source_name:
                return record
        return None

    def raw_bytes(self, image_id: str) -> bytes:
        record = self._records[image_id]
        return self._bytes[record.content_hash]

    def decode(self, image_id: str) -> Image.Image:
        return decode_image(self.raw_bytes(image_id))

    def records(self) -> List[ImageRecord]:
        return list(self._records.values())

    def __len__(self) -> int:
        return len(self._records)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageStore):
            return NotImplemented
        return self._records == other._records and self._bytes == other._bytes

    def extract_region(self, image: ImageRecord, region: Region) -> Image.Image:
        """Crop the region out of the stored original (whole image = full copy)."""
        return crop_region(self.decode(image.id), region)

    def render_overlay(
        self, image: ImageRecord, boxes: Sequence[BoundingBox], style: Optional[OverlayStyle] = None
    ) -> Image.Image:
        return draw_overlay(self.decode(image.id), boxes, style)
