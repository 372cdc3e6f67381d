"""Interpretable components of raw instances.

An instance is either an 8-bit image (numpy uint8 array of shape
``(height, width, channels)`` with 1 or 3 channels) or a text document
(``str``). This module maps instances to M interpretable components
(image superpixels or text token types) and reconstructs perturbed
instances from binary masks over those components.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from PIL import Image

from .errors import InputError

# An instance is an image array or a text document.
Instance = np.ndarray | str

PER_SUPERPIXEL_MEAN = "mean"
DELETE_TOKENS = "delete"

# Maximal runs of alphanumeric characters (unicode-aware, underscore excluded).
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_WS_RE = re.compile(r"\s+")


def load_image(path: str) -> np.ndarray:
    """Load a PNG as a uint8 array of shape (h, w, c), c in {1, 3}."""
    with Image.open(path) as img:
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.uint8)[:, :, None]
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return arr


def load_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


@dataclass(frozen=True)
class SegmentMap:
    """Per-pixel component labels for an image.

    Labels must be contiguous: every value in 0..m-1 occurs at least once.
    """

    labels: np.ndarray

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        if labels.ndim != 2:
            raise InputError("segment map labels must be a 2-D array")
        if labels.min() < 0:
            bad = np.argwhere(labels < 0)[0]
            raise InputError(
                f"segment map row {bad[0]}, column {bad[1]}: negative label"
            )
        m = int(labels.max()) + 1
        present = np.bincount(labels.ravel(), minlength=m)
        missing = np.flatnonzero(present == 0)
        if missing.size:
            hole = int(missing[0])
            bad = np.argwhere(labels > hole)[0]
            raise InputError(
                f"segment map labels are not contiguous: label {hole} never "
                f"occurs but row {bad[0]}, column {bad[1]} holds label "
                f"{labels[bad[0], bad[1]]}"
            )
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def grid_segment(image: np.ndarray, rows: int, cols: int) -> SegmentMap:
    """Segment an image into a rows x cols grid of superpixels.

    Dimensions are split as evenly as possible: the first ``height % rows``
    bands are one pixel taller, and likewise for columns. Pixel (x, y) gets
    label ``row_index * cols + col_index``.
    """
    _require_image(image)
    h, w = image.shape[:2]
    if rows * cols < 2:
        raise InputError("grid must have at least 2 cells")
    if rows < 1 or cols < 1 or rows > h or cols > w:
        raise InputError(
            f"grid {rows}x{cols} does not fit a {h}x{w} image"
        )
    row_sizes = [h // rows + 1] * (h % rows) + [h // rows] * (rows - h % rows)
    col_sizes = [w // cols + 1] * (w % cols) + [w // cols] * (cols - w % cols)
    row_idx = np.repeat(np.arange(rows, dtype=np.int32), row_sizes)
    col_idx = np.repeat(np.arange(cols, dtype=np.int32), col_sizes)
    labels = row_idx[:, None] * cols + col_idx[None, :]
    return SegmentMap(labels)


def load_segment_map(path: str, image: np.ndarray) -> SegmentMap:
    """Load a CSV label map (one row per pixel row) and validate it."""
    _require_image(image)
    h, w = image.shape[:2]
    grid: list[list[int]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for r, row in enumerate(csv.reader(fh)):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            parsed = []
            for c, cell in enumerate(row):
                try:
                    parsed.append(int(cell.strip()))
                except ValueError:
                    raise InputError(
                        f"segment map row {r}, column {c}: "
                        f"{cell.strip()!r} is not an integer"
                    ) from None
            grid.append(parsed)
    if len(grid) != h or any(len(row) != w for row in grid):
        rows = len(grid)
        cols = len(grid[0]) if grid else 0
        raise InputError(
            f"segment map is {rows}x{cols} but the image is {h}x{w}"
        )
    return SegmentMap(np.array(grid, dtype=np.int32))


@dataclass(frozen=True)
class TokenMap:
    """Distinct token types of a document with their character spans."""

    tokens: tuple[str, ...]
    occurrences: tuple[tuple[tuple[int, int], ...], ...]
    lowercase: bool = True

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise InputError("token types must be unique")
        if len(self.occurrences) != len(self.tokens):
            raise InputError("one span list per token type is required")
        spans = sorted(s for group in self.occurrences for s in group)
        for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
            if b0 < a1:
                raise InputError(f"overlapping token spans {a0}:{a1} and {b0}:{b1}")

    @property
    def m(self) -> int:
        return len(self.tokens)


def tokenize(text: str, lowercase: bool = True) -> TokenMap:
    """Split a document into token types (maximal alphanumeric runs).

    Types are deduplicated in order of first appearance; ``occurrences``
    records every span of every type. Raises if the document has no tokens.
    """
    tokens: list[str] = []
    spans: dict[str, list[tuple[int, int]]] = {}
    for match in _TOKEN_RE.finditer(text):
        tok = match.group(0)
        if lowercase:
            tok = tok.lower()
        if tok not in spans:
            tokens.append(tok)
            spans[tok] = []
        spans[tok].append(match.span())
    if not tokens:
        raise InputError("document contains no tokens")
    return TokenMap(
        tokens=tuple(tokens),
        occurrences=tuple(tuple(spans[t]) for t in tokens),
        lowercase=lowercase,
    )


def _require_image(instance) -> np.ndarray:
    if not isinstance(instance, np.ndarray):
        raise InputError("expected an image instance (numpy array)")
    if instance.ndim != 3 or instance.shape[2] not in (1, 3):
        raise InputError(
            f"image must have shape (h, w, c) with c in {{1, 3}}, "
            f"got {instance.shape}"
        )
    if instance.dtype != np.uint8:
        raise InputError(f"image must be uint8, got {instance.dtype}")
    return instance


@dataclass(frozen=True)
class InterpretableInstance:
    """An instance paired with its components and a masking rule.

    ``baseline`` is the rule used for components switched off by a mask:
    for images, ``"mean"`` (replace with the component's mean colour,
    rounded half-up to 8 bits) or a fixed colour tuple; for text, token
    deletion (``"delete"``), the only rule.
    """

    original: np.ndarray | str
    components: "SegmentMap | TokenMap"
    baseline: str | tuple[int, ...] | None = None  # None: modality default

    def __post_init__(self):
        if isinstance(self.components, SegmentMap):
            img = _require_image(self.original)
            seg = self.components
            if (seg.height, seg.width) != img.shape[:2]:
                raise InputError(
                    f"segment map {seg.height}x{seg.width} does not match "
                    f"image {img.shape[0]}x{img.shape[1]}"
                )
            baseline = self.baseline if self.baseline is not None else PER_SUPERPIXEL_MEAN
            if baseline != PER_SUPERPIXEL_MEAN:
                baseline = tuple(int(v) for v in baseline)
                if len(baseline) not in (1, 3) or any(
                    not 0 <= v <= 255 for v in baseline
                ):
                    raise InputError(
                        "fixed-colour baseline must be 1 or 3 values in 0..255"
                    )
            img = np.ascontiguousarray(img)
            img.setflags(write=False)
            object.__setattr__(self, "original", img)
            object.__setattr__(self, "baseline", baseline)
        elif isinstance(self.components, TokenMap):
            if not isinstance(self.original, str):
                raise InputError("a TokenMap requires a text instance")
            baseline = self.baseline if self.baseline is not None else DELETE_TOKENS
            if baseline != DELETE_TOKENS:
                raise InputError("text masking only supports token deletion")
            for tok, group in zip(self.components.tokens, self.components.occurrences):
                for start, end in group:
                    span = self.original[start:end]
                    if (span.lower() if self.components.lowercase else span) != tok:
                        raise InputError(
                            f"token map span {start}:{end} does not spell {tok!r}"
                        )
            object.__setattr__(self, "baseline", baseline)
        else:
            raise InputError("components must be a SegmentMap or a TokenMap")

    @property
    def m(self) -> int:
        return self.components.m

    @property
    def modality(self) -> str:
        return "image" if isinstance(self.components, SegmentMap) else "text"

    @cached_property
    def baseline_image(self) -> np.ndarray:
        """The fully masked image: every component replaced per the rule."""
        if self.modality != "image":
            raise InputError("baseline_image is only defined for images")
        img = self.original
        labels = self.components.labels
        if self.baseline == PER_SUPERPIXEL_MEAN:
            flat = img.reshape(-1, img.shape[2]).astype(np.float64)
            lab = labels.ravel()
            counts = np.bincount(lab, minlength=self.m).astype(np.float64)
            means = np.empty((self.m, img.shape[2]))
            for ch in range(img.shape[2]):
                means[:, ch] = np.bincount(lab, weights=flat[:, ch], minlength=self.m)
            means /= counts[:, None]
            fill = np.floor(means + 0.5).astype(np.uint8)  # round half-up
        else:
            colour = self.baseline
            if len(colour) != img.shape[2]:
                colour = (int(round(sum(colour) / len(colour))),) * img.shape[2]
            fill = np.tile(np.array(colour, dtype=np.uint8), (self.m, 1))
        base = fill[labels]
        base.setflags(write=False)
        return base

    @cached_property
    def _component_pixels(self) -> list[np.ndarray]:
        lab = self.components.labels.ravel()
        order = np.argsort(lab, kind="stable")
        bounds = np.searchsorted(lab[order], np.arange(self.m + 1))
        return [order[bounds[j]:bounds[j + 1]] for j in range(self.m)]


def _check_mask(mask, m: int) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 1 or arr.shape[0] != m:
        raise InputError(f"mask must have length {m}, got shape {arr.shape}")
    return arr.astype(bool)


def reconstruct(interp: InterpretableInstance, mask) -> "np.ndarray | str":
    """Rebuild a perturbed instance from a binary component mask.

    Components with mask 1 keep their original content; components with
    mask 0 are replaced per the baseline rule. The all-ones mask returns
    the original instance bit-exactly.
    """
    mask = _check_mask(mask, interp.m)
    if interp.modality == "image":
        return reconstruct_batch(interp, mask[None, :])[0]
    return _reconstruct_text(interp, mask)


def reconstruct_batch(interp: InterpretableInstance, masks) -> np.ndarray | list:
    """Vectorised ``reconstruct`` over an (n, m) mask matrix.

    Returns an (n, h, w, c) uint8 array for images, or a list of strings
    for text.
    """
    masks = np.asarray(masks)
    if masks.ndim != 2 or masks.shape[1] != interp.m:
        raise InputError(
            f"masks must have shape (n, {interp.m}), got {masks.shape}"
        )
    active = masks.astype(bool)
    if interp.modality == "text":
        return [_reconstruct_text(interp, row) for row in active]
    labels = interp.components.labels
    keep = active[:, labels]  # (n, h, w)
    return np.where(keep[..., None], interp.original, interp.baseline_image)


def _reconstruct_text(interp: InterpretableInstance, mask: np.ndarray) -> str:
    text = interp.original
    if mask.all():
        return text
    drop: list[tuple[int, int]] = []
    for j in np.flatnonzero(~mask):
        drop.extend(interp.components.occurrences[j])
    drop.sort()
    parts = []
    cursor = 0
    for start, end in drop:
        parts.append(text[cursor:start])
        cursor = end
    parts.append(text[cursor:])
    return _WS_RE.sub(" ", "".join(parts)).strip()


def recover_masks(interp: InterpretableInstance, instances) -> np.ndarray:
    """Invert ``reconstruct``: recover the component mask of each instance.

    A component counts as active when its content matches the original
    exactly (for images, every pixel; for text, the token type is present).
    Raises InputError when an instance is not derivable from ``interp`` by
    masking. Note that a component whose baseline equals its original
    content is indistinguishable from an active one and is reported as
    active; the reconstructions are identical either way.
    """
    if interp.modality == "image":
        batch = np.asarray(instances)
        if batch.ndim == 3:
            batch = batch[None]
        if batch.shape[1:] != interp.original.shape or batch.dtype != np.uint8:
            raise InputError(
                "instances do not match the original image's shape/dtype"
            )
        n = batch.shape[0]
        h, w, c = interp.original.shape
        eq = (batch == interp.original).all(axis=3).reshape(n, h * w)
        masks = np.empty((n, interp.m), dtype=np.int8)
        for j, pixels in enumerate(interp._component_pixels):
            masks[:, j] = eq[:, pixels].all(axis=1)
        rebuilt = reconstruct_batch(interp, masks)
        if not (rebuilt == batch).all():
            bad = int(np.flatnonzero((rebuilt != batch).any(axis=(1, 2, 3)))[0])
            raise InputError(
                f"instance {bad} is not a masked variant of the original image"
            )
        return masks
    texts = [instances] if isinstance(instances, str) else list(instances)
    lc = interp.components.lowercase
    masks = np.empty((len(texts), interp.m), dtype=np.int8)
    for i, doc in enumerate(texts):
        if not isinstance(doc, str):
            raise InputError("expected text instances")
        present = {
            t.lower() if lc else t for t in _TOKEN_RE.findall(doc)
        }
        masks[i] = [tok in present for tok in interp.components.tokens]
        if _reconstruct_text(interp, masks[i].astype(bool)) != doc:
            raise InputError(
                f"instance {i} is not a masked variant of the original text"
            )
    return masks
