"""Deterministic image corpus used by the evaluation and pipeline tests.

Images are built as raw 24-bit BMP bytes (no encoder involved), so their
content hashes are stable across platforms and library versions. The
recorded response map and ground-truth table under tests/fixtures/ are
keyed against exactly these bytes; test_fixture_integrity guards the
committed files against drift.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Callable, Dict, List, Tuple

CAT_RESPONSES = ("Siamese cat (Cat)", "Himalayan cat (Cat)")
DOG_RESPONSES = ("Dachshund (Dog)", "German Shepherd (Dog)")
WRONG_RESPONSE = "Dachshund (Dog)"  # deliberately wrong answer for one cat

CORPUS_SIZE = 270  # 135 cats + 135 dogs
WIDTH, HEIGHT = 16, 12


def make_bmp(width: int, height: int, pixel: Callable[[int, int], Tuple[int, int, int]]) -> bytes:
    """Write a 24-bit uncompressed BMP by hand (rows bottom-up, 4-byte padded)."""
    row_size = (3 * width + 3) & ~3
    body = bytearray()
    for y in range(height - 1, -1, -1):
        row = bytearray()
        for x in range(width):
            r, g, b = pixel(x, y)
            row += bytes((b, g, r))
        row += b"\x00" * (row_size - len(row))
        body += row
    header = struct.pack("<2sIHHI", b"BM", 54 + len(body), 0, 0, 54)
    info = struct.pack("<IiiHHIIiiII", 40, width, height, 1, 24, 0, len(body), 2835, 2835, 0, 0)
    return bytes(header + info + body)


def corpus_image(index: int) -> bytes:
    """Image #index: a gradient seeded by the index, unique bytes per index.

    The top-left pixel spells out the index itself, which keeps images
    distinct even where the mod-256 gradients would repeat.
    """

    def pixel(x: int, y: int) -> Tuple[int, int, int]:
        if x == 0 and y == 0:
            return (index % 256, index // 256, 255)
        return (
            (index * 7 + x * 3) % 256,
            (index * 13 + y * 5) % 256,
            (index * 29 + x + y) % 256,
        )

    return make_bmp(WIDTH, HEIGHT, pixel)


def build_corpus() -> List[Tuple[str, bytes, str, str]]:
    """All 270 items as (source_name, bmp_bytes, truth_class, response).

    Cats come first (indexes 0..134), dogs after (135..269). Responses
    alternate between the two breed strings of the right base class, except
    cat #0, which gets a dog answer — the single planted error. Tally:
    269 of 270 responses carry the correct base class.
    """
    items: List[Tuple[str, bytes, str, str]] = []
    half = CORPUS_SIZE // 2
    for i in range(half):
        response = WRONG_RESPONSE if i == 0 else CAT_RESPONSES[i % 2]
        items.append((f"cat_{i:04d}.bmp", corpus_image(i), "cat", response))
    for i in range(half):
        response = DOG_RESPONSES[i % 2]
        items.append((f"dog_{i:04d}.bmp", corpus_image(half + i), "dog", response))
    return items


def response_map() -> Dict[str, str]:
    """content hash -> recorded response, as the mock provider consumes it."""
    return {
        hashlib.sha256(data).hexdigest(): response
        for _, data, _, response in build_corpus()
    }


def truth_by_source() -> Dict[str, str]:
    return {name: truth for name, _, truth, _ in build_corpus()}


def responses_tsv() -> str:
    mapping = response_map()
    return "".join(f"{digest}\t{text}\n" for digest, text in sorted(mapping.items()))


def truth_tsv() -> str:
    return "".join(f"{name}\t{truth}\n" for name, truth in sorted(truth_by_source().items()))
