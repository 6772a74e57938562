"""L0 distances and campaign aggregation (SR / Mean / Median / MP)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def l0_components(x, x_adv) -> int:
    """Number of scalar components whose stored values differ exactly.

    Exact comparison is sound because untouched components are bit-identical
    by the attack contract.
    """
    a = np.asarray(x)
    b = np.asarray(x_adv)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def l0_pixels(x, x_adv, shape=None) -> int:
    """Spatial positions (h, w) where any channel differs.

    Falls back to :func:`l0_components` when there is no channel dimension
    (flat or single-plane inputs).
    """
    a = np.asarray(x)
    b = np.asarray(x_adv)
    if shape is None:
        shape = a.shape
    shape = tuple(int(s) for s in shape)
    if a.size != int(np.prod(shape)) or a.size != b.size:
        raise ValueError(f"shape {shape} incompatible with inputs of size {a.size}/{b.size}")
    if len(shape) < 3:
        return l0_components(a, b)
    channels = shape[0]
    diff = (a.reshape(shape) != b.reshape(shape)).reshape(channels, -1)
    return int(np.count_nonzero(diff.any(axis=0)))


def lower_median(values) -> float:
    """Median that returns the lower-middle element for even-sized inputs."""
    ordered = sorted(values)
    if not ordered:
        raise ValueError("median of empty sequence")
    return float(ordered[(len(ordered) - 1) // 2])


@dataclass(frozen=True)
class SampleRecord:
    """Flattened outcome of one attacked sample."""

    sample_id: int
    true_label: int
    target: int | None
    success: bool
    original_label: int
    final_label: int
    iterations: int
    mp: int
    l0_components: int
    l0_pixels: int
    wall_time_ns: int

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "true_label": self.true_label,
            "target": self.target,
            "success": self.success,
            "original_label": self.original_label,
            "final_label": self.final_label,
            "iterations": self.iterations,
            "mp": self.mp,
            "l0_components": self.l0_components,
            "l0_pixels": self.l0_pixels,
            "wall_time_ns": self.wall_time_ns,
        }

    @staticmethod
    def from_dict(d: dict) -> "SampleRecord":
        return SampleRecord(**{k: d[k] for k in SampleRecord.__dataclass_fields__})


@dataclass(frozen=True)
class CampaignSummary:
    """Aggregate scores; L0 statistics cover successful samples only."""

    sr: float  # success percentage over attempted samples
    mean_l0: float | None
    median_l0: float | None
    mean_mp: float | None
    attempted: int
    succeeded: int
    skipped_misclassified: int = 0
    skipped_target_conflict: int = 0
    l0_metric: str = "components"

    def to_dict(self) -> dict:
        return {
            "sr": self.sr,
            "mean_l0": self.mean_l0,
            "median_l0": self.median_l0,
            "mean_mp": self.mean_mp,
            "attempted": self.attempted,
            "succeeded": self.succeeded,
            "skipped_misclassified": self.skipped_misclassified,
            "skipped_target_conflict": self.skipped_target_conflict,
            "l0_metric": self.l0_metric,
        }

    @staticmethod
    def from_dict(d: dict) -> "CampaignSummary":
        return CampaignSummary(**{k: d[k] for k in CampaignSummary.__dataclass_fields__})


def summarize(
    records,
    *,
    l0_metric: str = "components",
    skipped_misclassified: int = 0,
    skipped_target_conflict: int = 0,
) -> CampaignSummary:
    """SR over attempted samples; mean/median L0 over successes; mean MP over all."""
    if l0_metric not in ("components", "pixels"):
        raise ValueError(f"l0_metric must be 'components' or 'pixels', got {l0_metric!r}")
    records = list(records)
    attempted = len(records)
    successes = [r for r in records if r.success]
    l0_of = (lambda r: r.l0_components) if l0_metric == "components" else (lambda r: r.l0_pixels)
    l0s = [l0_of(r) for r in successes]
    return CampaignSummary(
        sr=100.0 * len(successes) / attempted if attempted else 0.0,
        mean_l0=float(np.mean(l0s)) if l0s else None,
        median_l0=lower_median(l0s) if l0s else None,
        mean_mp=float(np.mean([r.mp for r in records])) if records else None,
        attempted=attempted,
        succeeded=len(successes),
        skipped_misclassified=skipped_misclassified,
        skipped_target_conflict=skipped_target_conflict,
        l0_metric=l0_metric,
    )
