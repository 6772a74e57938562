"""Sparse noise-driven attack engines: FGA (increasing/decreasing), VFGA, UA.

Each iteration perturbs exactly one input component: a saliency rule scores
the still-eligible components from one gradient of the objective class
probability, a batch of noisy candidates for the selected component is pushed
through the victim, and the best candidate replaces the current adversarial
point — whether or not it improves on it.  The chosen component then leaves
the eligible set for good.

Targeted mode drives the target-class probability up; untargeted mode drives
the original predicted class down, which is implemented as the exact mirror:
negate the gradient in the selection rules and pick the candidate minimizing
(instead of maximizing) the objective probability.

Noise scales derive from the perturbed component's distance to the domain
bounds: increasing moves use folded Gaussians with sqrt(theta) = 1 - x_i,
decreasing moves use their negatives with sqrt(theta) = x_i, and the uniform
baseline draws from U([0, 1 - x_i]).

All tie-breaks (component selection and candidate selection) go to the lowest
index, and every random draw comes from an explicit RngStream, so a full run
is a pure function of (model, input, config, stream).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .metrics import l0_components, l0_pixels
from .model import Classifier, CountingModel
from .noise import (
    NoiseSpec,
    RngStream,
    sample_folded_gaussian,
    sample_neg_folded_gaussian,
)

VARIANTS = ("fga-inc", "fga-dec", "vfga", "ua")
MODES = ("targeted", "untargeted")


class AttackConfigError(ValueError):
    """The attack configuration is self-contradictory or incomplete."""


class GammaExhaustedError(RuntimeError):
    """A selection rule was asked to choose from an empty component set."""


@dataclass(frozen=True)
class AttackConfig:
    """Which engine to run and how.

    ``max_iter=None`` resolves to the input dimension at attack time (the
    maximal useful value, since each iteration consumes one component).
    ``target`` may stay None in targeted mode until attack time — campaign
    target policies fill it in per sample — but running an attack without it
    is a config error.
    """

    variant: str
    mode: str = "untargeted"
    target: int | None = None
    n_samples: int = 10
    max_iter: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise AttackConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.mode not in MODES:
            raise AttackConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_samples < 1:
            raise AttackConfigError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.max_iter is not None and self.max_iter < 1:
            raise AttackConfigError(f"max_iter must be >= 1, got {self.max_iter}")

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "mode": self.mode,
            "target": self.target,
            "n_samples": self.n_samples,
            "max_iter": self.max_iter,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "AttackConfig":
        return AttackConfig(**{k: d[k] for k in AttackConfig.__dataclass_fields__})


@dataclass
class IterationRecord:
    """Audit trail of one attack iteration."""

    iteration: int
    index: int  # component removed from the eligible set
    direction: int  # +1 increase side, -1 decrease side
    delta: float  # applied change on `index` (may be 0.0 after clipping)
    objective: float  # objective-class probability of the accepted candidate
    chosen: int  # winning candidate position within `scores`
    scores: np.ndarray  # objective probability of every candidate
    mp_after: int  # cumulative MP once this iteration finished
    i_plus: int | None = None  # voting attack only
    i_minus: int | None = None

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "index": self.index,
            "direction": self.direction,
            "delta": self.delta,
            "objective": self.objective,
            "chosen": self.chosen,
            "scores": [float(s) for s in self.scores],
            "mp_after": self.mp_after,
            "i_plus": self.i_plus,
            "i_minus": self.i_minus,
        }


@dataclass
class AttackResult:
    success: bool
    x_adv: np.ndarray
    original_label: int
    final_label: int
    iterations: int
    mp: int
    l0_components: int
    l0_pixels: int
    wall_time_ns: int
    history: list[IterationRecord] | None = field(default=None, repr=False)


def select_fga_inc(x_adv: np.ndarray, gamma: np.ndarray, grad: np.ndarray) -> int:
    """Component in gamma maximizing (1 - x_i) * grad_i; ties to the lowest index."""
    if len(gamma) == 0:
        raise GammaExhaustedError("no eligible components left")
    scores = (1.0 - x_adv[gamma]) * grad[gamma]
    return int(gamma[int(np.argmax(scores))])


def select_fga_dec(x_adv: np.ndarray, gamma: np.ndarray, grad: np.ndarray) -> int:
    """Component in gamma minimizing x_i * grad_i; ties to the lowest index."""
    if len(gamma) == 0:
        raise GammaExhaustedError("no eligible components left")
    scores = x_adv[gamma] * grad[gamma]
    return int(gamma[int(np.argmin(scores))])


def make_candidates(x_adv: np.ndarray, i0: int, samples) -> np.ndarray:
    """One candidate per sample: x_adv with component i0 moved and clipped to [0, 1].

    Duplicates are allowed — clipping may collapse several samples onto a bound.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if not 0 <= i0 < x_adv.size:
        raise IndexError(f"component {i0} out of range for {x_adv.size} features")
    cands = np.repeat(x_adv[None, :], len(samples), axis=0)
    cands[:, i0] = np.clip(x_adv[i0] + samples, 0.0, 1.0)
    return cands


def pick_best(model: Classifier, candidates: np.ndarray, c: int, mode: str):
    """Index of the best candidate by objective probability, plus all scores.

    Targeted mode maximizes F_c, untargeted minimizes it; ties go to the
    lowest candidate index.  Scoring is one batched forward pass.
    """
    if len(candidates) == 0:
        raise ValueError("no candidates to score")
    scores = model.forward_batch(candidates)[:, c]
    best = int(np.argmax(scores)) if mode == "targeted" else int(np.argmin(scores))
    return best, scores


class _AttackState:
    """Shared prologue/bookkeeping for both engines."""

    def __init__(self, model, x, config: AttackConfig, rng, trace: bool):
        self.config = config
        self.x0 = np.asarray(x, dtype=np.float64)
        flat = self.x0.reshape(-1)
        if flat.size != int(np.prod(model.input_shape)):
            raise ValueError(
                f"input of size {flat.size} incompatible with model input size "
                f"{int(np.prod(model.input_shape))}"
            )
        if flat.min() < 0.0 or flat.max() > 1.0:
            raise ValueError("input components must lie in [0, 1]")
        self.model = CountingModel(model)
        self.rng = rng if rng is not None else RngStream(config.seed, 0)
        self.trace = trace
        self.started_ns = time.perf_counter_ns()

        self.x = flat.copy()
        self.original_label = self.model.label(flat)  # initial label check
        self.current_label = self.original_label
        if config.mode == "targeted":
            if config.target is None:
                raise AttackConfigError("targeted mode requires a target class")
            if not 0 <= config.target < model.num_classes:
                raise AttackConfigError(
                    f"target {config.target} out of range [0, {model.num_classes})"
                )
            self.c = config.target
        else:
            self.c = self.original_label
        self.max_iter = config.max_iter if config.max_iter is not None else flat.size
        self.iterations = 0
        self.history: list[IterationRecord] | None = [] if trace else None

    @property
    def satisfied(self) -> bool:
        if self.config.mode == "targeted":
            return self.current_label == self.c
        return self.current_label != self.original_label

    def grad(self) -> np.ndarray:
        """Objective gradient: negated in untargeted mode so argmax rules mirror to argmin."""
        g = self.model.grad_class(self.x, self.c)
        return g if self.config.mode == "targeted" else -g

    def accept(self, cands, best, scores, i0, direction, i_plus=None, i_minus=None):
        delta = cands[best, i0] - self.x[i0]
        self.x = cands[best]
        self.iterations += 1
        self.current_label = self.model.label(self.x)  # per-iteration label check
        if self.history is not None:
            self.history.append(
                IterationRecord(
                    iteration=self.iterations,
                    index=i0,
                    direction=direction,
                    delta=float(delta),
                    objective=float(scores[best]),
                    chosen=best,
                    scores=scores,
                    mp_after=self.model.mp,
                    i_plus=i_plus,
                    i_minus=i_minus,
                )
            )

    def result(self) -> AttackResult:
        x_adv = self.x.reshape(self.x0.shape)
        return AttackResult(
            success=self.satisfied,
            x_adv=x_adv,
            original_label=self.original_label,
            final_label=self.current_label,
            iterations=self.iterations,
            mp=self.model.mp,
            l0_components=l0_components(self.x0, x_adv),
            l0_pixels=l0_pixels(self.x0, x_adv),
            wall_time_ns=time.perf_counter_ns() - self.started_ns,
            history=self.history,
        )


def run_fga(model, x, config: AttackConfig, *, rng: RngStream | None = None, trace: bool = False) -> AttackResult:
    """One-sided attack: fga-inc and ua only increase components, fga-dec only decreases.

    fga-inc/ua start from the components below 1, fga-dec from those above 0.
    Per iteration: one gradient, one saliency pick, n_samples noisy candidates
    at the picked component, one batched scoring pass, one label check.
    """
    if config.variant not in ("fga-inc", "fga-dec", "ua"):
        raise AttackConfigError(f"run_fga handles fga-inc/fga-dec/ua, got {config.variant!r}")
    st = _AttackState(model, x, config, rng, trace)
    increasing = config.variant in ("fga-inc", "ua")
    gamma = np.flatnonzero(st.x < 1.0) if increasing else np.flatnonzero(st.x > 0.0)

    while len(gamma) > 0 and not st.satisfied and st.iterations < st.max_iter:
        g = st.grad()
        if increasing:
            i0 = select_fga_inc(st.x, gamma, g)
            theta = 1.0 - st.x[i0] if config.variant == "ua" else (1.0 - st.x[i0]) ** 2
            family = "uniform" if config.variant == "ua" else "folded-gaussian"
        else:
            i0 = select_fga_dec(st.x, gamma, g)
            theta = st.x[i0] ** 2
            family = "neg-folded-gaussian"
        samples = NoiseSpec(family, theta).sample(config.n_samples, st.rng)
        cands = make_candidates(st.x, i0, samples)
        best, scores = pick_best(st.model, cands, st.c, config.mode)
        st.accept(cands, best, scores, i0, +1 if increasing else -1)
        gamma = gamma[gamma != i0]
    return st.result()


def run_vfga(model, x, config: AttackConfig, *, rng: RngStream | None = None, trace: bool = False) -> AttackResult:
    """Voting attack: per iteration the increase rule proposes i+ and the decrease
    rule proposes i-, n_samples candidates are drawn on each side (positive
    folded noise at i+, then negative folded noise at i-), and the winner over
    all 2*n_samples candidates decides both the move and which single index
    leaves the eligible set.

    The eligible set initially excludes only components at 1, mirroring the
    increasing attack's init even though the decreasing direction is blocked
    at 0 — a deliberate asymmetry kept for fidelity with the one-sided engine.
    """
    if config.variant != "vfga":
        raise AttackConfigError(f"run_vfga handles vfga, got {config.variant!r}")
    st = _AttackState(model, x, config, rng, trace)
    gamma = np.flatnonzero(st.x < 1.0)
    ns = config.n_samples

    while len(gamma) > 0 and not st.satisfied and st.iterations < st.max_iter:
        g = st.grad()
        i_plus = select_fga_inc(st.x, gamma, g)
        i_minus = select_fga_dec(st.x, gamma, g)
        pos = sample_folded_gaussian((1.0 - st.x[i_plus]) ** 2, ns, st.rng)
        neg = sample_neg_folded_gaussian(st.x[i_minus] ** 2, ns, st.rng)
        cands = np.vstack([make_candidates(st.x, i_plus, pos), make_candidates(st.x, i_minus, neg)])
        best, scores = pick_best(st.model, cands, st.c, config.mode)
        i0 = i_plus if best < ns else i_minus
        st.accept(cands, best, scores, i0, +1 if best < ns else -1, i_plus=i_plus, i_minus=i_minus)
        gamma = gamma[gamma != i0]
    return st.result()


def run_attack(model, x, config: AttackConfig, *, rng: RngStream | None = None, trace: bool = False) -> AttackResult:
    """Dispatch on the configured variant."""
    if config.variant == "vfga":
        return run_vfga(model, x, config, rng=rng, trace=trace)
    return run_fga(model, x, config, rng=rng, trace=trace)
