"""Deterministic noise sources for the attack engines.

All randomness flows through :class:`RngStream`, a counter-based SplitMix64
generator: raw 64-bit output number ``c`` of stream ``(seed, k)`` is

    mix64(base + (c + 1) * PHI),    base = mix64(mix64(seed) + k * PHI)

with PHI = 0x9E3779B97F4A7C15 and ``mix64`` the SplitMix64 finalizer.
Uniform doubles take the top 53 bits of a raw output; Gaussian variates use
the basic Box-Muller transform on uniform pairs.  No platform RNG is involved
anywhere, so every sequence is bit-stable across runs and platforms and any
(seed, stream) pair can be re-derived independently, e.g. one stream per
attacked sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_U64 = np.uint64
_PHI = 0x9E3779B97F4A7C15

NOISE_FAMILIES = ("folded-gaussian", "neg-folded-gaussian", "uniform")
PROBE_FAMILIES = ("folded-gaussian", "gaussian")

# Minimum Monte-Carlo size for which the probe's error bars are meaningful.
MIN_PROBE_TRIALS = 10_000


class ProbeDomainError(ValueError):
    """Probe input too close to the upper bound for the requested theta."""


def _mix64(z: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer; uint64 array in, uint64 array out (wraparound).
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


class RngStream:
    """One deterministic sample stream addressed by (seed, stream index).

    Identical (seed, stream) pairs yield bit-identical sequences; distinct
    stream indices yield independent-looking sequences from the same seed.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        s = np.array([self.seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
        k = np.array([self.stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
        self._base = _mix64(_mix64(s) + k * _U64(_PHI))[0]
        self._counter = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"

    def raw(self, count: int) -> np.ndarray:
        """Next `count` raw 64-bit outputs as a uint64 array."""
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        c = np.arange(self._counter + 1, self._counter + count + 1, dtype=np.uint64)
        self._counter += count
        return _mix64(self._base + c * _U64(_PHI))

    def uniform(self, count: int) -> np.ndarray:
        """Floats in [0, 1) with 53-bit resolution."""
        return (self.raw(count) >> _U64(11)).astype(np.float64) * 2.0**-53

    def normal(self, count: int) -> np.ndarray:
        """Standard normals via Box-Muller; pairs (z1, z2) come out interleaved."""
        pairs = (count + 1) // 2
        raw = self.raw(2 * pairs)
        # u1 in (0, 1] keeps the log finite; u2 in [0, 1).
        u1 = ((raw[:pairs] >> _U64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[pairs:] >> _U64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        ang = (2.0 * math.pi) * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(ang)
        out[1::2] = r * np.sin(ang)
        return out[:count]

    def integer(self, bound: int) -> int:
        """One integer in [0, bound); the 2^-64-level modulo bias is irrelevant here."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return int(self.raw(1)[0] % _U64(bound))

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of arange(n), driven by raw draws."""
        idx = np.arange(n)
        if n > 1:
            raw = self.raw(n - 1)
            for k, i in enumerate(range(n - 1, 0, -1)):
                j = int(raw[k] % _U64(i + 1))
                idx[i], idx[j] = idx[j], idx[i]
        return idx


def sample_folded_gaussian(theta: float, count: int, rng: RngStream) -> np.ndarray:
    """|N(0, theta)| samples: nonnegative, mean sqrt(2*theta/pi)."""
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    return np.abs(rng.normal(count)) * math.sqrt(theta)


def sample_neg_folded_gaussian(theta: float, count: int, rng: RngStream) -> np.ndarray:
    """-|N(0, theta)|: the folded samples mirrored to the nonpositive axis."""
    return -sample_folded_gaussian(theta, count, rng)


def sample_uniform(theta: float, count: int, rng: RngStream) -> np.ndarray:
    """i.i.d. uniform draws on [0, theta]."""
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    return rng.uniform(count) * theta


@dataclass(frozen=True)
class NoiseSpec:
    """A perturbation distribution: family plus its scale parameter.

    ``theta`` is the Gaussian variance for the folded families and the
    interval endpoint for the uniform family.
    """

    family: str
    theta: float

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}")
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")

    def sample(self, count: int, rng: RngStream) -> np.ndarray:
        if self.family == "folded-gaussian":
            return sample_folded_gaussian(self.theta, count, rng)
        if self.family == "neg-folded-gaussian":
            return sample_neg_folded_gaussian(self.theta, count, rng)
        return sample_uniform(self.theta, count, rng)


@dataclass(frozen=True)
class ProbeRow:
    """One Monte-Carlo measurement of the first-order response to noise."""

    theta: float
    family: str
    predicted: float  # sqrt(2*theta/pi) * dF_c/dx_i; 0 for symmetric noise
    empirical: float  # mean of F_c(x + S*e_i) - F_c(x) over the trials
    std_err: float
    trials: int

    @property
    def ratio(self) -> float:
        return self.empirical / self.predicted if self.predicted else math.nan

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "family": self.family,
            "predicted": self.predicted,
            "empirical": self.empirical,
            "std_err": self.std_err,
            "trials": self.trials,
            "ratio": self.ratio,
        }


def expansion_probe(
    model,
    x,
    component: int,
    thetas,
    trials: int,
    rng: RngStream,
    *,
    c: int | None = None,
    family: str = "folded-gaussian",
    batch_size: int = 50_000,
) -> list[ProbeRow]:
    """Measure the mean shift of one class probability under single-component noise.

    For folded-Gaussian noise the shift should match sqrt(2*theta/pi) times the
    input gradient up to an O(theta) remainder; for symmetric Gaussian noise the
    first-order term cancels and the predicted column is zero.  The input must
    keep ``x[component] + 4*sqrt(theta) <= 1`` so that no sample needs clipping.
    """
    if family not in PROBE_FAMILIES:
        raise ValueError(f"unknown probe family {family!r}")
    if trials < MIN_PROBE_TRIALS:
        raise ValueError(f"trials must be >= {MIN_PROBE_TRIALS}, got {trials}")
    flat = np.asarray(x, dtype=np.float64).reshape(-1)
    if not 0 <= component < flat.size:
        raise IndexError(f"component {component} out of range for {flat.size} features")
    thetas = [float(t) for t in thetas]
    for theta in thetas:
        if theta < 0:
            raise ValueError(f"theta must be >= 0, got {theta}")
        if flat[component] + 4.0 * math.sqrt(theta) > 1.0:
            raise ProbeDomainError(
                f"x[{component}]={flat[component]:.4f} + 4*sqrt({theta:g}) exceeds 1; "
                "pick a smaller theta or an interior component"
            )
    if c is None:
        c = model.label(flat)
    base = float(model.forward(flat)[c])
    grad_i = float(model.grad_class(flat, c)[component])

    rows = []
    for theta in thetas:
        if family == "folded-gaussian":
            samples = sample_folded_gaussian(theta, trials, rng)
            predicted = math.sqrt(2.0 * theta / math.pi) * grad_i
        else:
            samples = rng.normal(trials) * math.sqrt(theta)
            predicted = 0.0
        deltas = np.empty(trials)
        for start in range(0, trials, batch_size):
            chunk = samples[start : start + batch_size]
            batch = np.repeat(flat[None, :], len(chunk), axis=0)
            batch[:, component] = flat[component] + chunk
            deltas[start : start + len(chunk)] = model.forward_batch(batch)[:, c] - base
        rows.append(
            ProbeRow(
                theta=theta,
                family=family,
                predicted=predicted,
                empirical=float(deltas.mean()),
                std_err=float(deltas.std(ddof=1) / math.sqrt(trials)),
                trials=trials,
            )
        )
    return rows
