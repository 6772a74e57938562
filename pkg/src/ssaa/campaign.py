"""Campaign orchestration: run one attack configuration over a sample set.

Only correctly predicted samples are attacked; the rest are counted as
skipped.  Each attacked sample gets its own noise stream,
``RngStream(seed, sample_index)``, and targeted campaigns with the random
policy draw per-sample targets from ``RngStream(seed, TARGET_STREAM_BASE +
sample_index)``, redrawing deterministically while the draw equals the true
label.  The campaign seed is the attack config's seed, so the (dataset seed,
training seed, campaign seed) triple fixes every byte of the report except
wall-time fields.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, replace

from . import __version__
from .attack import AttackConfig, run_attack
from .data import LabeledDataset, load_dataset
from .metrics import CampaignSummary, SampleRecord, summarize
from .model import Classifier, load_weights
from .noise import RngStream

TARGET_POLICIES = ("fixed", "random")
TARGET_STREAM_BASE = 1 << 32  # keeps target draws off the attack streams

SAMPLE_CSV_FIELDS = (
    "sample_id",
    "true_label",
    "target",
    "success",
    "original_label",
    "final_label",
    "iterations",
    "mp",
    "l0_components",
    "l0_pixels",
    "wall_time_ns",
)


@dataclass(frozen=True)
class CampaignConfig:
    attack: AttackConfig
    target_policy: str | None = None  # required iff attack.mode == "targeted"
    sample_limit: int | None = None
    l0_metric: str = "components"
    trace: bool = False
    dataset: dict | None = None  # loader descriptor; echoed into the report
    model_path: str | None = None

    def __post_init__(self):
        if self.l0_metric not in ("components", "pixels"):
            raise ValueError(f"l0_metric must be 'components' or 'pixels', got {self.l0_metric!r}")
        if self.attack.mode == "targeted":
            if self.target_policy not in TARGET_POLICIES:
                raise ValueError(
                    f"targeted campaigns need a target policy from {TARGET_POLICIES}, "
                    f"got {self.target_policy!r}"
                )
            if self.target_policy == "fixed" and self.attack.target is None:
                raise ValueError("fixed target policy requires attack.target")
        elif self.target_policy is not None:
            raise ValueError("target policy only applies to targeted campaigns")

    def to_dict(self) -> dict:
        return {
            "attack": self.attack.to_dict(),
            "target_policy": self.target_policy,
            "sample_limit": self.sample_limit,
            "l0_metric": self.l0_metric,
            "trace": self.trace,
            "dataset": self.dataset,
            "model_path": self.model_path,
        }

    @staticmethod
    def from_dict(d: dict) -> "CampaignConfig":
        fields = {k: d[k] for k in CampaignConfig.__dataclass_fields__}
        fields["attack"] = AttackConfig.from_dict(fields["attack"])
        return CampaignConfig(**fields)


@dataclass
class Report:
    """Everything one campaign produced, JSON-serializable with stable key order."""

    config: dict
    version: str
    samples: list[SampleRecord]
    summary: CampaignSummary
    traces: dict | None = None
    probe: list | None = None
    elapsed_ns: int = 0

    def to_dict(self) -> dict:
        out = {
            "config": self.config,
            "version": self.version,
            "samples": [r.to_dict() for r in self.samples],
            "summary": self.summary.to_dict(),
            "elapsed_ns": self.elapsed_ns,
        }
        if self.traces is not None:
            out["traces"] = self.traces
        if self.probe is not None:
            out["probe"] = self.probe
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @staticmethod
    def from_dict(d: dict) -> "Report":
        return Report(
            config=d["config"],
            version=d["version"],
            samples=[SampleRecord.from_dict(s) for s in d["samples"]],
            summary=CampaignSummary.from_dict(d["summary"]),
            traces=d.get("traces"),
            probe=d.get("probe"),
            elapsed_ns=d.get("elapsed_ns", 0),
        )

    @staticmethod
    def load(path) -> "Report":
        with open(path, "r", encoding="utf-8") as fh:
            return Report.from_dict(json.load(fh))


def _draw_target(seed: int, sample_index: int, true_label: int, num_classes: int) -> int:
    stream = RngStream(seed, TARGET_STREAM_BASE + sample_index)
    target = stream.integer(num_classes)
    while target == true_label:
        target = stream.integer(num_classes)
    return target


def run_campaign(
    config: CampaignConfig,
    model: Classifier | None = None,
    dataset: LabeledDataset | None = None,
) -> Report:
    """Attack every correctly predicted sample of the (limited) dataset."""
    if model is None:
        if config.model_path is None:
            raise ValueError("no model given and no model_path configured")
        model = load_weights(config.model_path)
    if dataset is None:
        if config.dataset is None:
            raise ValueError("no dataset given and no dataset descriptor configured")
        dataset = load_dataset(config.dataset)
    dataset = dataset.take(config.sample_limit)

    started = time.perf_counter_ns()
    seed = config.attack.seed
    targeted = config.attack.mode == "targeted"
    records: list[SampleRecord] = []
    traces: dict[str, list] = {}
    skipped_mis = 0
    skipped_conflict = 0

    for idx in range(len(dataset)):
        x = dataset.inputs[idx]
        y = int(dataset.labels[idx])
        if model.label(x) != y:
            skipped_mis += 1
            continue
        attack_cfg = config.attack
        target = None
        if targeted:
            if config.target_policy == "random":
                target = _draw_target(seed, idx, y, model.num_classes)
            else:
                target = attack_cfg.target
                if target == y:
                    skipped_conflict += 1
                    continue
            attack_cfg = replace(attack_cfg, target=target)
        res = run_attack(model, x, attack_cfg, rng=RngStream(seed, idx), trace=config.trace)
        records.append(
            SampleRecord(
                sample_id=idx,
                true_label=y,
                target=target,
                success=res.success,
                original_label=res.original_label,
                final_label=res.final_label,
                iterations=res.iterations,
                mp=res.mp,
                l0_components=res.l0_components,
                l0_pixels=res.l0_pixels,
                wall_time_ns=res.wall_time_ns,
            )
        )
        if config.trace:
            traces[str(idx)] = [rec.to_dict() for rec in res.history]

    summary = summarize(
        records,
        l0_metric=config.l0_metric,
        skipped_misclassified=skipped_mis,
        skipped_target_conflict=skipped_conflict,
    )
    return Report(
        config=config.to_dict(),
        version=__version__,
        samples=records,
        summary=summary,
        traces=traces if config.trace else None,
        elapsed_ns=time.perf_counter_ns() - started,
    )


def write_samples_csv(report: Report, path) -> None:
    """Flatten the per-sample records for spreadsheets."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SAMPLE_CSV_FIELDS)
        writer.writeheader()
        for rec in report.samples:
            writer.writerow(rec.to_dict())


_SWEEP_KEYS = {"ns": "n_samples", "max-iter": "max_iter"}


def curve_rows(reports, sweep: str = "ns") -> list[dict]:
    """One (sweep value, SR, mean L0, median L0, mean MP) row per report.

    All reports must share their configuration except the swept attack field;
    rows come back sorted by sweep value.
    """
    if sweep not in _SWEEP_KEYS:
        raise ValueError(f"sweep must be one of {sorted(_SWEEP_KEYS)}, got {sweep!r}")
    reports = list(reports)
    if len(reports) < 2:
        raise ValueError(f"need at least 2 reports to draw a curve, got {len(reports)}")
    key = _SWEEP_KEYS[sweep]

    def stripped(rep: Report) -> dict:
        cfg = json.loads(json.dumps(rep.config))  # deep copy
        cfg["attack"].pop(key, None)
        return cfg

    base = stripped(reports[0])
    for rep in reports[1:]:
        if stripped(rep) != base:
            raise ValueError(f"reports disagree on more than the swept field {key!r}")

    rows = []
    for rep in reports:
        rows.append(
            {
                "sweep": rep.config["attack"][key],
                "sr": rep.summary.sr,
                "mean_l0": rep.summary.mean_l0,
                "median_l0": rep.summary.median_l0,
                "mean_mp": rep.summary.mean_mp,
            }
        )
    rows.sort(key=lambda r: (r["sweep"] is None, r["sweep"]))
    return rows


def write_curves_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=("sweep", "sr", "mean_l0", "median_l0", "mean_mp"))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
