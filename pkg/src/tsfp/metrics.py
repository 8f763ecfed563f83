"""Saliency evaluation metrics: NSS, CC, SIM, AUC-Judd, shuffled AUC."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .losses import loss_cc, loss_nss
from .tensor import Tensor

METRICS = ("nss", "cc", "sim", "auc_j", "s_auc")
# metrics whose value depends on the predicted map's standard deviation
SIGMA_METRICS = ("nss", "cc")


def _pred(S) -> Tensor:
    return Tensor(np.asarray(S.data if isinstance(S, Tensor) else S, dtype=np.float64), dtype=np.float64)


def metric_nss(S, F, return_flag: bool = False):
    loss = loss_nss(_pred(S), F)
    value = -float(loss.data)
    return (value, loss.flags["degenerate"]) if return_flag else value


def metric_cc(S, G, return_flag: bool = False):
    loss = loss_cc(_pred(S), G)
    value = -float(loss.data)
    return (value, loss.flags["degenerate"]) if return_flag else value


def metric_sim(S, G) -> float:
    """Histogram intersection of the two sum-normalised maps."""
    s = np.asarray(S, dtype=np.float64).ravel()
    g = np.asarray(G, dtype=np.float64).ravel()
    if s.shape != g.shape:
        raise ValueError(f"shape mismatch {np.shape(S)} vs {np.shape(G)}")
    ss, gs = s.sum(), g.sum()
    if ss <= 0 or gs <= 0:
        raise ValueError("SIM needs maps with positive sum")
    return float(np.minimum(s / ss, g / gs).sum())


def _roc_area(pos: np.ndarray, neg: np.ndarray) -> float:
    """Trapezoidal ROC area; thresholds are the distinct positive values."""
    thresholds = np.unique(pos)[::-1]
    pos_sorted = np.sort(pos)
    neg_sorted = np.sort(neg)
    # counts of values >= threshold
    tp = (pos.size - np.searchsorted(pos_sorted, thresholds, side="left")) / pos.size
    fp = (neg.size - np.searchsorted(neg_sorted, thresholds, side="left")) / neg.size
    x = np.concatenate(([0.0], fp, [1.0]))
    y = np.concatenate(([0.0], tp, [1.0]))
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def metric_auc_judd(S, F) -> float:
    s = np.asarray(S, dtype=np.float64).ravel()
    f = np.asarray(F).ravel() != 0
    if s.shape != f.shape:
        raise ValueError("saliency and fixation maps differ in size")
    if not f.any():
        raise ValueError("AUC-J is undefined without fixations")
    if f.all():
        raise ValueError("AUC-J is undefined when every pixel is fixated")
    return _roc_area(s[f], s[~f])


def metric_sauc(S, F, negatives: Iterable) -> float:
    """AUC of fixated pixels against the fixated locations of ``negatives``
    (fixation maps from other frames or videos), each counted once per map."""
    s = np.asarray(S, dtype=np.float64).ravel()
    f = np.asarray(F).ravel() != 0
    if not f.any():
        raise ValueError("s-AUC is undefined without fixations")
    neg_vals = [s[np.asarray(m).ravel() != 0] for m in negatives]
    neg = np.concatenate(neg_vals) if neg_vals else np.empty(0)
    if neg.size == 0:
        raise ValueError("s-AUC needs at least one negative location")
    return _roc_area(s[f], neg)


@dataclass
class EvalRecord:
    """Metric values of one frame, or means over many (``frame == -1``)."""

    video: str
    frame: int
    nss: float
    cc: float
    sim: float
    auc_j: float
    s_auc: float
    degenerate: bool = False
    n_frames: int = 1
    n_excluded: int = 0

    def values(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}


def frame_record(video: str, frame: int, S, F, G, negatives=None) -> EvalRecord:
    nss, deg_n = metric_nss(S, F, return_flag=True)
    cc, deg_c = metric_cc(S, G, return_flag=True)
    if negatives is not None:
        negatives = list(negatives)
    s_auc = metric_sauc(S, F, negatives) if negatives else math.nan
    return EvalRecord(
        video, frame, nss, cc, metric_sim(S, G), metric_auc_judd(S, F), s_auc,
        degenerate=deg_n or deg_c,
    )


def _mean(values: Sequence[float]) -> float:
    vals = [v for v in values if not math.isnan(v)]
    return float(np.mean(vals)) if vals else math.nan


def _video_mean(records: Sequence[EvalRecord]) -> EvalRecord:
    out = {}
    for m in METRICS:
        use = [r for r in records if not (r.degenerate and m in SIGMA_METRICS)]
        out[m] = _mean([getattr(r, m) for r in use])
    excluded = sum(r.n_excluded if r.frame < 0 else int(r.degenerate) for r in records)
    frames = sum(r.n_frames for r in records)
    return EvalRecord(records[0].video, -1, **out, n_frames=frames, n_excluded=excluded)


def aggregate(records: Sequence[EvalRecord], name: str = "ALL") -> EvalRecord:
    """Unweighted mean over frames within each video, then over videos.

    Frames flagged degenerate are left out of the NSS and CC means (the AUC
    and SIM values of such frames are still meaningful); their count is
    reported in ``n_excluded``.  NaN values (e.g. s-AUC without negatives)
    are skipped.
    """
    if not records:
        raise ValueError("aggregate needs at least one record")
    by_video: dict[str, list[EvalRecord]] = {}
    for r in records:
        by_video.setdefault(r.video, []).append(r)
    per_video = [_video_mean(rs) for rs in by_video.values()]
    if len(per_video) == 1:
        return per_video[0]
    out = {m: _mean([getattr(v, m) for v in per_video]) for m in METRICS}
    return EvalRecord(
        name, -1, **out,
        n_frames=sum(v.n_frames for v in per_video),
        n_excluded=sum(v.n_excluded for v in per_video),
    )


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.6f}"


def format_report(records: Sequence[EvalRecord]) -> str:
    """CSV-style report: one line per frame, then per-video and dataset means."""
    lines = ["video,frame,nss,cc,sim,aucj,sauc"]
    ordered = sorted(records, key=lambda r: (r.video, r.frame))
    for r in ordered:
        lines.append(",".join([r.video, str(r.frame)] + [_fmt(v) for v in r.values().values()]))
    videos = sorted({r.video for r in ordered})
    for vid in videos:
        agg = aggregate([r for r in ordered if r.video == vid])
        lines.append(",".join([vid, "mean"] + [_fmt(v) for v in agg.values().values()]))
    if ordered:
        agg = aggregate(ordered)
        lines.append(",".join(["ALL", "mean"] + [_fmt(v) for v in agg.values().values()]))
        lines.append(f"# frames={agg.n_frames} excluded_degenerate={agg.n_excluded} videos={len(videos)}")
    return "\n".join(lines) + "\n"
