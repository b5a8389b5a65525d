"""Faithfulness and localization metrics.

The three confidence metrics follow the printed definitions exactly: the
average drop clips at zero, the deletion variant deliberately does not, so
it can go negative when muting the highlighted region raises confidence.
Samples whose original target probability rounds to exactly zero make the
drop ratios undefined; they are flagged, counted, and left out of the
aggregates.
"""

from dataclasses import dataclass, field

import numpy as np

from . import graph, ops

THRESHOLD_GRID = np.linspace(0.0, 1.0, 41)


@dataclass
class BoundingBox:
    """Pixel box, inclusive top/left, exclusive bottom/right."""

    top: int
    left: int
    bottom: int
    right: int

    def __post_init__(self):
        if not (0 <= self.top < self.bottom and 0 <= self.left < self.right):
            raise ValueError(f"degenerate bounding box {(self.top, self.left, self.bottom, self.right)}")


@dataclass
class EvalSample:
    """One evaluation input: image, target class, optional ground-truth box."""

    image: np.ndarray
    class_index: int
    bbox: BoundingBox = None

    def __post_init__(self):
        self.image = ops.as_tensor(self.image)
        if self.image.ndim != 3:
            raise ValueError(f"sample image must be (C, H, W), got shape {self.image.shape}")
        if self.class_index < 0:
            raise ValueError(f"negative class index {self.class_index}")
        if self.bbox is not None:
            h, w = self.image.shape[1:]
            if self.bbox.bottom > h or self.bbox.right > w:
                raise ValueError(f"bounding box {self.bbox} exceeds image {h}x{w}")


@dataclass
class SampleRecord:
    """Per-sample measurements; fields stay None until their metric runs."""

    y: float = None
    o: float = None
    d: float = None
    proportion: float = None
    insertion_auc: float = None
    deletion_auc: float = None
    excluded: bool = False


@dataclass
class MetricReport:
    """Per-method metric records plus aggregates recomputed from them."""

    method: str
    records: list = field(default_factory=list)
    excluded_count: int = 0

    @property
    def n(self):
        return len(self.records)

    def _kept(self, attr):
        return [getattr(r, attr) for r in self.records if not r.excluded and getattr(r, attr) is not None]

    def increase_in_confidence(self):
        pairs = [(r.y, r.o) for r in self.records if not r.excluded and r.o is not None]
        if not pairs:
            return None
        return 100.0 * float(np.mean([1.0 if y < o else 0.0 for y, o in pairs]))

    def average_drop(self):
        pairs = [(r.y, r.o) for r in self.records if not r.excluded and r.o is not None]
        if not pairs:
            return None
        return 100.0 * float(np.mean([max(0.0, y - o) / y for y, o in pairs]))

    def average_drop_in_deletion(self):
        pairs = [(r.y, r.d) for r in self.records if not r.excluded and r.d is not None]
        if not pairs:
            return None
        return 100.0 * float(np.mean([(y - d) / y for y, d in pairs]))

    def mean_insertion_auc(self):
        vals = self._kept("insertion_auc")
        return float(np.mean(vals)) if vals else None

    def mean_deletion_auc(self):
        vals = self._kept("deletion_auc")
        return float(np.mean(vals)) if vals else None

    def mean_proportion(self):
        vals = self._kept("proportion")
        return float(np.mean(vals)) if vals else None

    def to_dict(self):
        return {
            "method": self.method,
            "n": self.n,
            "excluded": self.excluded_count,
            "aggregates": {
                "increase_in_confidence": self.increase_in_confidence(),
                "average_drop": self.average_drop(),
                "average_drop_in_deletion": self.average_drop_in_deletion(),
                "mean_insertion_auc": self.mean_insertion_auc(),
                "mean_deletion_auc": self.mean_deletion_auc(),
                "mean_proportion": self.mean_proportion(),
            },
            "records": [
                {
                    "y": r.y,
                    "o": r.o,
                    "d": r.d,
                    "proportion": r.proportion,
                    "insertion_auc": r.insertion_auc,
                    "deletion_auc": r.deletion_auc,
                    "excluded": r.excluded,
                }
                for r in self.records
            ],
        }

    def render_text(self):
        """Line-oriented table, one aggregate per line."""

        def fmt(v):
            return "-" if v is None else f"{v:.6g}"

        lines = [
            f"method                    {self.method}",
            f"samples                   {self.n}",
            f"excluded (Y == 0)         {self.excluded_count}",
            f"increase-in-confidence %  {fmt(self.increase_in_confidence())}",
            f"average-drop %            {fmt(self.average_drop())}",
            f"average-drop-deletion %   {fmt(self.average_drop_in_deletion())}",
            f"insertion-auc             {fmt(self.mean_insertion_auc())}",
            f"deletion-auc              {fmt(self.mean_deletion_auc())}",
            f"pointing-proportion       {fmt(self.mean_proportion())}",
        ]
        return "\n".join(lines) + "\n"


def explanation_image(image, emap):
    """Keep the image only where the normalized map says it matters."""
    image = ops.as_tensor(image)
    if emap.normalized.shape != image.shape[1:]:
        raise ValueError(f"map {emap.normalized.shape} does not match image spatial dims {image.shape[1:]}")
    return ops.mask_image(image, emap.normalized)


def inverted_explanation_image(image, emap):
    """Complement mask: keep the image where the map says it does not matter."""
    image = ops.as_tensor(image)
    if emap.normalized.shape != image.shape[1:]:
        raise ValueError(f"map {emap.normalized.shape} does not match image spatial dims {image.shape[1:]}")
    return ops.mask_image(image, 1.0 - emap.normalized)


def _target_prob(model, image, class_index):
    _, _, probs = graph.forward_full(model, image)
    return float(probs[class_index])


def ic_ad_add(model, samples, maps, method="unknown"):
    """Increase-in-confidence, average drop and average drop in deletion.

    Y/O/D are the target softmax probabilities of the original image, the
    explanation image and the inverted explanation image.
    """
    if len(samples) != len(maps):
        raise ValueError(f"{len(samples)} samples but {len(maps)} maps")
    report = MetricReport(method=method)
    for sample, emap in zip(samples, maps):
        y = _target_prob(model, sample.image, sample.class_index)
        o = _target_prob(model, explanation_image(sample.image, emap), sample.class_index)
        d = _target_prob(model, inverted_explanation_image(sample.image, emap), sample.class_index)
        rec = SampleRecord(y=y, o=o, d=d, excluded=(y == 0.0))
        if rec.excluded:
            report.excluded_count += 1
        report.records.append(rec)
    return report


def threshold_mask(normalized, delta):
    """Binary mask keeping the top 100*delta percent most salient pixels.

    delta=0 keeps none, delta=1 keeps all; the pixel count rounds to the
    nearest integer and ties at the cut resolve by flat pixel index.
    """
    flat = normalized.reshape(-1)
    k = int(round(delta * flat.size))
    mask = np.zeros(flat.size, dtype=np.float32)
    if k > 0:
        order = np.argsort(-flat, kind="stable")
        mask[order[:k]] = 1.0
    return mask.reshape(normalized.shape)


def insertion_deletion_auc(model, sample, emap):
    """Areas under the insertion and deletion probability curves.

    The normalized map is thresholded on a 41-point grid over [0, 1]; the
    insertion curve reveals the top pixels, the deletion curve removes
    them.  Trapezoidal quadrature over the grid.
    """
    image = sample.image
    if emap.normalized.shape != image.shape[1:]:
        raise ValueError(f"map {emap.normalized.shape} does not match image spatial dims {image.shape[1:]}")
    insertion = np.empty(THRESHOLD_GRID.size)
    deletion = np.empty(THRESHOLD_GRID.size)
    for i, delta in enumerate(THRESHOLD_GRID):
        mask = threshold_mask(emap.normalized, float(delta))
        insertion[i] = _target_prob(model, ops.mask_image(image, mask), sample.class_index)
        deletion[i] = _target_prob(model, ops.mask_image(image, 1.0 - mask), sample.class_index)
    ins_auc = float(np.trapezoid(insertion, THRESHOLD_GRID))
    del_auc = float(np.trapezoid(deletion, THRESHOLD_GRID))
    return ins_auc, del_auc


def pointing_game(emap, bbox):
    """Fraction of normalized saliency energy inside the bounding box."""
    m = emap.normalized
    h, w = m.shape
    if bbox.bottom > h or bbox.right > w:
        raise ValueError(f"bounding box {bbox} exceeds map {h}x{w}")
    total = float(m.astype(np.float64).sum())
    if total <= 0.0:
        raise ValueError("explanation map has zero total energy; proportion is undefined")
    inside = float(m[bbox.top:bbox.bottom, bbox.left:bbox.right].astype(np.float64).sum())
    return inside / total


def cosine_similarity(a, b):
    """Cosine of the angle between two coefficient vectors."""
    va = np.asarray(a.values if hasattr(a, "values") else a, dtype=np.float64)
    vb = np.asarray(b.values if hasattr(b, "values") else b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"coefficient length mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero coefficient vector")
    if np.array_equal(va, vb):
        return 1.0
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))
