"""Prandtl-Ishlinskii hysteresis on top of the two-phase backbone.

The twist-to-length map of a real actuator traces a loop: at equal twist
the string is a little longer while winding up (friction delays coil
formation) and a little shorter while unwinding (coils persist). A
weighted superposition of play operators captures this memory. Weights
are identified from data by nonnegative least squares, which keeps the
operator monotone and rate independent by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .errors import ParameterError, UnderdeterminedError
from .model import LENGTH_FLOOR, LoadCase, StringSpec, TwoPhaseParams, effective_length, length

DEFAULT_THRESHOLD_COUNT = 8


class IllConditionedFit(UserWarning):
    """Identification regressor matrix is rank deficient."""


@dataclass
class PlayOperator:
    """Backlash element of half-width ``threshold`` with persistent state."""

    threshold: float
    state: float = 0.0

    def __post_init__(self):
        if self.threshold < 0:
            raise ParameterError("play threshold must be nonnegative")

    def update(self, x: float) -> float:
        self.state = max(x - self.threshold, min(x + self.threshold, self.state))
        return self.state


def play(op: PlayOperator, x: float) -> float:
    """Advance one play operator by one input sample."""
    return op.update(x)


def _validate_thresholds(thresholds: np.ndarray) -> np.ndarray:
    t = np.asarray(thresholds, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ParameterError("thresholds must be a nonempty 1-d sequence")
    if t[0] != 0.0:
        raise ParameterError("first threshold must be 0")
    if np.any(np.diff(t) <= 0):
        raise ParameterError("thresholds must be strictly ascending")
    return t


@dataclass
class PIModel:
    """Superposition of play operators. One instance, one writer."""

    thresholds: np.ndarray
    weights: np.ndarray
    states: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.thresholds = _validate_thresholds(self.thresholds)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != self.thresholds.shape:
            raise ParameterError("weights and thresholds must have equal length")
        if np.any(self.weights < 0):
            raise ParameterError("weights must be nonnegative")
        if self.states is None:
            self.states = np.zeros_like(self.thresholds)
        else:
            self.states = np.asarray(self.states, dtype=float)
            if self.states.shape != self.thresholds.shape:
                raise ParameterError("states and thresholds must have equal length")

    @classmethod
    def zeros(cls, thresholds) -> "PIModel":
        t = _validate_thresholds(np.asarray(thresholds, dtype=float))
        return cls(thresholds=t, weights=np.zeros_like(t))

    def reset(self) -> None:
        self.states = np.zeros_like(self.thresholds)

    def copy(self) -> "PIModel":
        return PIModel(self.thresholds.copy(), self.weights.copy(), self.states.copy())

    def step(self, x: float) -> float:
        """Advance every operator by one sample, return the weighted sum."""
        self.states = np.maximum(x - self.thresholds, np.minimum(x + self.thresholds, self.states))
        return float(self.weights @ self.states)


def pi_apply(model: PIModel, inputs) -> np.ndarray:
    """Run an input sequence through the model, updating its memory."""
    xs = np.asarray(inputs, dtype=float)
    out = np.empty_like(xs)
    for k, x in enumerate(xs):
        out[k] = model.step(float(x))
    return out


def default_thresholds(inputs, count: int = DEFAULT_THRESHOLD_COUNT) -> np.ndarray:
    """Uniform threshold grid over the input range, starting at 0."""
    xs = np.asarray(inputs, dtype=float)
    if xs.size == 0:
        raise ParameterError("cannot derive thresholds from an empty sequence")
    span = float(xs.max() - xs.min())
    if span <= 0.0:
        return np.array([0.0])
    return np.linspace(0.0, span, count, endpoint=False)


def play_responses(thresholds, inputs) -> np.ndarray:
    """Matrix of fresh play operator outputs, one column per threshold."""
    t = _validate_thresholds(np.asarray(thresholds, dtype=float))
    xs = np.asarray(inputs, dtype=float)
    states = np.zeros_like(t)
    out = np.empty((xs.size, t.size))
    for k, x in enumerate(xs):
        states = np.maximum(x - t, np.minimum(x + t, states))
        out[k] = states
    return out


def stop_responses(thresholds, inputs) -> np.ndarray:
    """Complementary stop operator outputs, x - play(x), bounded by the threshold."""
    xs = np.asarray(inputs, dtype=float)
    return xs[:, None] - play_responses(thresholds, xs)


def _nnls_fit(regressors: np.ndarray, targets: np.ndarray):
    if np.linalg.matrix_rank(regressors) < regressors.shape[1]:
        warnings.warn(
            "identification regressors are rank deficient; weights are not unique",
            IllConditionedFit,
            stacklevel=3,
        )
    weights, residual = nnls(regressors, targets)
    return weights, float(residual)


def pi_identify(inputs, targets, thresholds) -> tuple[PIModel, float]:
    """Identify nonnegative weights from matched input/target sequences.

    Returns the identified model (memory reset) and the residual 2-norm.
    The sequences must be at least four samples per threshold.
    """
    xs = np.asarray(inputs, dtype=float)
    ys = np.asarray(targets, dtype=float)
    t = _validate_thresholds(np.asarray(thresholds, dtype=float))
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ParameterError("inputs and targets must be 1-d sequences of equal length")
    if xs.size < 4 * t.size:
        raise UnderdeterminedError(
            f"need at least {4 * t.size} samples to identify {t.size} weights"
        )
    weights, residual = _nnls_fit(play_responses(t, xs), ys)
    return PIModel(thresholds=t, weights=weights), residual


def identify_length_correction(
    spec: StringSpec,
    params: TwoPhaseParams,
    load: LoadCase,
    thetas,
    lengths,
    thresholds,
) -> tuple[PIModel, float]:
    """Fit the loop-widening correction of hysteretic_length to length data.

    The correction basis is the stop operator family (input minus play),
    which vanishes on the virgin state and flips sign between winding and
    unwinding branches. Returns the model and the residual 2-norm of the
    corrected fit; compare against the backbone-only residual to judge
    whether the data carries a loop at all.
    """
    xs = np.asarray(thetas, dtype=float)
    ys = np.asarray(lengths, dtype=float)
    t = _validate_thresholds(np.asarray(thresholds, dtype=float))
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ParameterError("thetas and lengths must be 1-d sequences of equal length")
    if xs.size < 4 * t.size:
        raise UnderdeterminedError(
            f"need at least {4 * t.size} samples to identify {t.size} weights"
        )
    backbone = np.array([length(spec, params, load, float(x)) for x in xs])
    basis = stop_responses(t, xs)
    # The zero-threshold stop operator is identically zero (play is the
    # identity there), so that column is structurally unidentifiable;
    # pin its weight and fit the rest.
    live = t > 0.0
    fitted, residual = _nnls_fit(basis[:, live], ys - backbone)
    weights = np.zeros(t.size)
    weights[live] = fitted
    return PIModel(thresholds=t, weights=weights), residual


def hysteretic_length(
    spec: StringSpec,
    params: TwoPhaseParams,
    load: LoadCase,
    model: PIModel,
    thetas,
    training=None,
) -> np.ndarray:
    """Length sequence with the hysteresis correction applied (mm).

    The backbone is the two-phase law; the correction is the weighted
    stop operator sum driven by twist, so winding branches sit above the
    backbone and unwinding branches below it. Output is clamped to
    (0, L_eff]. With all weights zero this is exactly the backbone.
    """
    xs = np.asarray(thetas, dtype=float)
    l_eff = effective_length(spec, params, load)
    out = np.empty_like(xs)
    for k, x in enumerate(xs):
        backbone = length(spec, params, load, float(x), training=training)
        model.step(float(x))
        correction = float(model.weights @ (x - model.states))
        out[k] = min(max(backbone + correction, LENGTH_FLOOR), l_eff)
    return out
