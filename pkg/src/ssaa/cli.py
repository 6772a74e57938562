"""Command-line front end: train a victim, run attack campaigns, probe the
noise expansion, and tabulate/plot sweeps.

Reports are single JSON documents; the attack and curves commands can also
emit CSV flattenings, and the report paths get matplotlib figures rendered
alongside them unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .attack import AttackConfig
from .campaign import (
    CampaignConfig,
    Report,
    curve_rows,
    run_campaign,
    write_curves_csv,
    write_samples_csv,
)
from .data import load_dataset
from .metrics import l0_components  # noqa: F401  (re-exported for scripting convenience)
from .model import TrainConfig, load_weights, save_weights, train_reference
from .noise import RngStream, expansion_probe


def _parse_shape(text: str) -> list[int]:
    try:
        dims = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad shape {text!r}; expected e.g. '48' or '1,8,8'")
    if not dims or any(d <= 0 for d in dims):
        raise argparse.ArgumentTypeError(f"bad shape {text!r}; dimensions must be positive")
    return dims


def _parse_hidden(text: str) -> tuple[int, ...]:
    if text.strip() in ("", "none"):
        return ()
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad hidden sizes {text!r}; expected e.g. '32' or '32,16'")


def _parse_thetas(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad theta list {text!r}")


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("dataset")
    group.add_argument("--images", help="IDX image file (optionally gzipped)")
    group.add_argument("--labels", help="IDX label file (optionally gzipped)")
    group.add_argument("--synthetic", action="store_true", help="generate separable blobs instead")
    group.add_argument("--classes", type=int, default=4, help="synthetic: number of classes")
    group.add_argument("--per-class", type=int, default=100, help="synthetic: samples per class")
    group.add_argument("--shape", type=_parse_shape, default=[48], help="synthetic: input shape, e.g. 48 or 1,8,8")
    group.add_argument("--data-seed", type=int, default=0, help="synthetic: generator seed")


def _dataset_descriptor(args) -> dict:
    if args.images or args.labels:
        if not (args.images and args.labels):
            raise SystemExit("--images and --labels must be given together")
        return {"kind": "idx", "images": args.images, "labels": args.labels}
    if args.synthetic:
        return {
            "kind": "synthetic",
            "classes": args.classes,
            "per_class": args.per_class,
            "shape": list(args.shape),
            "seed": args.data_seed,
        }
    raise SystemExit("no dataset: give --images/--labels or --synthetic")


def cmd_train(args) -> int:
    dataset = load_dataset(_dataset_descriptor(args))
    cfg = TrainConfig(
        hidden=args.hidden,
        activation=args.activation,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
    )
    model = train_reference(dataset, cfg)
    save_weights(model, args.out)
    print(f"trained {model.layer_sizes} ({model.activation}) on {len(dataset)} samples")
    print(f"train accuracy: {model.train_accuracy:.4f}")
    print(f"weights written to {args.out}")
    return 0


def cmd_attack(args) -> int:
    descriptor = _dataset_descriptor(args)
    attack = AttackConfig(
        variant=args.variant,
        mode=args.mode,
        target=args.target,
        n_samples=args.ns,
        max_iter=args.max_iter,
        seed=args.seed,
    )
    policy = None
    if args.mode == "targeted":
        policy = args.target_policy or ("fixed" if args.target is not None else "random")
    config = CampaignConfig(
        attack=attack,
        target_policy=policy,
        sample_limit=args.limit,
        l0_metric=args.l0,
        trace=args.trace,
        dataset=descriptor,
        model_path=args.model,
    )
    report = run_campaign(config)
    report.save(args.out)
    if args.csv:
        write_samples_csv(report, args.csv)
    s = report.summary
    print(f"attacked {s.attempted} samples ({s.skipped_misclassified} skipped as misclassified)")
    mean_l0 = "n/a" if s.mean_l0 is None else f"{s.mean_l0:.2f}"
    median_l0 = "n/a" if s.median_l0 is None else f"{s.median_l0:.1f}"
    mean_mp = "n/a" if s.mean_mp is None else f"{s.mean_mp:.1f}"
    print(f"SR {s.sr:.2f}%  mean L0 {mean_l0}  median L0 {median_l0}  mean MP {mean_mp}")
    print(f"report written to {args.out}")
    return 0


def _auto_component(model, x, thetas) -> int:
    import numpy as np

    flat = np.asarray(x, dtype=float).reshape(-1)
    c = model.label(flat)
    grad = model.grad_class(flat, c)
    margin = 4.0 * max(theta for theta in thetas) ** 0.5
    ok = flat + margin <= 1.0
    if not ok.any():
        raise SystemExit("no component satisfies the probe's no-clipping margin")
    scores = np.where(ok, np.abs(grad), -1.0)
    return int(np.argmax(scores))


def cmd_probe(args) -> int:
    model = load_weights(args.model)
    dataset = load_dataset(_dataset_descriptor(args))
    x = dataset.inputs[args.index]
    component = args.component if args.component is not None else _auto_component(model, x, args.thetas)
    rng = RngStream(args.seed)
    rows = expansion_probe(model, x, component, args.thetas, args.trials, rng, c=args.cls)
    if args.symmetric:
        rows += expansion_probe(
            model, x, component, args.thetas, args.trials, rng, c=args.cls, family="gaussian"
        )
    row_dicts = [row.to_dict() for row in rows]
    payload = {
        "config": {
            "model": args.model,
            "dataset": _dataset_descriptor(args),
            "index": args.index,
            "component": component,
            "class": args.cls,
            "thetas": list(args.thetas),
            "trials": args.trials,
            "seed": args.seed,
            "symmetric": args.symmetric,
        },
        "version": __version__,
        "probe": row_dicts,
    }
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    for row in rows:
        print(
            f"theta={row.theta:<10g} family={row.family:<18s} "
            f"predicted={row.predicted:+.3e} empirical={row.empirical:+.3e} "
            f"(3 SE = {3 * row.std_err:.1e})"
        )
    print(f"probe table written to {out}")
    if not args.no_figures:
        from .plots import render_probe_figure

        fig_path = render_probe_figure(row_dicts, out.with_suffix(".png"))
        print(f"figure written to {fig_path}")
    return 0


def cmd_curves(args) -> int:
    reports = [Report.load(path) for path in args.reports]
    rows = curve_rows(reports, sweep=args.sweep)
    write_curves_csv(rows, args.out)
    print(f"curve table ({len(rows)} rows) written to {args.out}")
    if not args.no_figures:
        from .plots import render_curve_figures

        label = "N_S" if args.sweep == "ns" else "max iterations"
        for path in render_curve_figures(rows, Path(args.out), sweep_label=label):
            print(f"figure written to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssaa",
        description="Sparse noise-driven adversarial attacks with a reference MLP victim.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the reference MLP and save its weights")
    _add_dataset_args(p)
    p.add_argument("--hidden", type=_parse_hidden, default=(32,), help="hidden sizes, e.g. '32,16' or 'none'")
    p.add_argument("--activation", choices=("sigmoid", "tanh"), default="tanh")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0, help="training seed")
    p.add_argument("--out", required=True, help="weight file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="run an attack campaign and write a JSON report")
    _add_dataset_args(p)
    p.add_argument("--model", required=True, help="weight file of the victim")
    p.add_argument("--variant", choices=("fga-inc", "fga-dec", "vfga", "ua"), default="vfga")
    p.add_argument("--mode", choices=("targeted", "untargeted"), default="untargeted")
    p.add_argument("--target", type=int, help="fixed target class (targeted mode)")
    p.add_argument("--target-policy", choices=("fixed", "random"), help="targeted mode: how to assign per-sample targets")
    p.add_argument("--ns", type=int, default=10, help="noise samples per iteration")
    p.add_argument("--max-iter", type=int, help="iteration cap (default: input dimension)")
    p.add_argument("--seed", type=int, default=0, help="campaign seed")
    p.add_argument("--limit", type=int, help="attack only the first N dataset samples")
    p.add_argument("--trace", action="store_true", help="record per-iteration history in the report")
    p.add_argument("--l0", choices=("components", "pixels"), default="components")
    p.add_argument("--out", required=True, help="report JSON to write")
    p.add_argument("--csv", help="also write per-sample records as CSV")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("probe", help="Monte-Carlo check of the first-order noise response")
    _add_dataset_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--index", type=int, default=0, help="dataset sample to probe")
    p.add_argument("--component", type=int, help="input component (default: most salient valid one)")
    p.add_argument("--cls", type=int, help="class whose probability is probed (default: predicted)")
    p.add_argument("--thetas", type=_parse_thetas, default=[1e-4, 1e-3])
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--symmetric", action="store_true", help="also probe symmetric Gaussian noise")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True, help="probe JSON to write")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("curves", help="tabulate and plot a sweep of attack reports")
    p.add_argument("reports", nargs="+", help="report JSON files from `ssaa attack`")
    p.add_argument("--sweep", choices=("ns", "max-iter"), default="ns")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True, help="curve CSV to write")
    p.set_defaults(func=cmd_curves)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
