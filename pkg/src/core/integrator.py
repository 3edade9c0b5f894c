"""Driver for piecewise-constant linear ODEs.

Both the master equation (vectorized density matrix) and the exact
Schrodinger oracle reduce to ``dy/dt = L y`` with ``L`` constant on each time
segment. Segments are integrated separately so no step ever crosses a switch.

``method="expm"`` propagates each segment with the matrix exponential, which
keeps long driven runs Hermitian and positive to round-off. Any other method
name is handed to :func:`scipy.integrate.solve_ivp`.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from ..utils.config import ODE_ATOL, ODE_METHOD, ODE_RTOL
from ..utils.logger import logger
from .errors import NumericalError

EXACT_METHOD = "expm"


@dataclass(frozen=True)
class Segment:
    """Generator ``matrix`` acting on ``[start, stop]``."""

    start: float
    stop: float
    matrix: np.ndarray


@dataclass
class PiecewiseSolution:
    """States on the requested grid plus continuous interpolants per segment."""

    times: np.ndarray
    states: np.ndarray
    segments: list[Segment] = field(default_factory=list)
    interpolants: list[object] = field(default_factory=list, repr=False)
    n_evaluations: int = 0

    def __call__(self, t: float) -> np.ndarray:
        """Interpolated state at ``t`` (requires ``dense_output=True``)."""
        if not self.interpolants:
            raise RuntimeError("solution was computed without dense output")
        for segment, sol in zip(self.segments, self.interpolants):
            if segment.start <= t <= segment.stop:
                return np.asarray(sol(t))  # type: ignore[operator]
        raise ValueError(f"t={t} outside integrated interval")


class _ExactInterpolant:
    """``y(t) = expm(L (t - start)) y_start`` on one segment."""

    def __init__(self, segment: Segment, y_start: np.ndarray) -> None:
        self._start = segment.start
        self._matrix = np.asarray(segment.matrix, dtype=complex)
        self._y_start = y_start

    def __call__(self, t: float) -> np.ndarray:
        return expm(self._matrix * (float(t) - self._start)) @ self._y_start


def _propagate_exact(
    segment: Segment, y: np.ndarray, points: np.ndarray
) -> tuple[np.ndarray, int, _ExactInterpolant]:
    """States at ``points`` by stepping with cached propagators ``expm(L dt)``."""
    matrix = np.asarray(segment.matrix, dtype=complex)
    propagators: dict[float, np.ndarray] = {}
    values = np.empty((points.size, y.size), dtype=complex)
    current, t = y, segment.start
    for i, stop in enumerate(points):
        dt = float(stop) - t
        if dt > 0:
            # grid steps repeat, so rounding to 1e-12 reuses the propagator
            key = round(dt, 12)
            step = propagators.get(key)
            if step is None:
                step = propagators[key] = expm(matrix * dt)
            current = step @ current
        values[i] = current
        t = float(stop)
    if not np.all(np.isfinite(values)):
        raise NumericalError(
            f"exact propagation produced non-finite values on [{segment.start}, {segment.stop}]"
        )
    return values, points.size, _ExactInterpolant(segment, np.array(y, dtype=complex))


def _propagate_adaptive(
    segment: Segment,
    y: np.ndarray,
    points: np.ndarray,
    *,
    rtol: float,
    atol: float,
    method: str,
    dense: bool,
) -> tuple[np.ndarray, int, object]:
    matrix = segment.matrix

    def rhs(_t: float, state: np.ndarray, _m: np.ndarray = matrix) -> np.ndarray:
        return _m @ state

    result = solve_ivp(
        rhs,
        (segment.start, segment.stop),
        y,
        method=method,
        t_eval=points,
        rtol=rtol,
        atol=atol,
        dense_output=dense,
    )
    if not result.success:
        raise NumericalError(
            f"integration failed on [{segment.start}, {segment.stop}]: {result.message}"
        )
    return result.y.T, int(result.nfev), result.sol


def split_segments(
    boundaries: Sequence[tuple[float, np.ndarray]], t_final: float
) -> list[Segment]:
    """Turn ``[(t_switch, L), ...]`` (``L`` valid until ``t_switch``) into segments.

    Switch times at or beyond ``t_final`` are clipped; zero-length segments
    are dropped.
    """
    segments: list[Segment] = []
    start = 0.0
    for stop, matrix in boundaries:
        stop = min(float(stop), t_final)
        if stop > start:
            segments.append(Segment(start, stop, matrix))
            start = stop
        if start >= t_final:
            break
    return segments


def integrate_piecewise(
    segments: Sequence[Segment],
    y0: np.ndarray,
    t_eval: np.ndarray,
    *,
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
    method: str = ODE_METHOD,
    dense_output: bool = False,
) -> PiecewiseSolution:
    """Integrate ``dy/dt = L_k y`` segment by segment.

    ``t_eval`` must be increasing and lie inside the union of the segments.
    A grid point that coincides with a switch time is reported once, from the
    segment that ends there.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or t_eval.size == 0:
        raise ValueError("t_eval must be a non-empty 1-D array")
    if np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_eval must be strictly increasing")
    if not segments:
        raise ValueError("at least one segment is required")
    if t_eval[0] < segments[0].start or t_eval[-1] > segments[-1].stop:
        raise ValueError("t_eval lies outside the integration interval")

    y = np.asarray(y0, dtype=complex)
    states = np.empty((t_eval.size, y.size), dtype=complex)
    dense: list[object] = []
    filled = 0
    n_evaluations = 0

    for k, segment in enumerate(segments):
        lower_ok = t_eval >= segment.start if k == 0 else t_eval > segment.start
        local_t = t_eval[lower_ok & (t_eval <= segment.stop)]
        # The segment end is always evaluated: it seeds the next segment.
        ends_on_grid = bool(local_t.size) and local_t[-1] == segment.stop
        points = local_t if ends_on_grid else np.append(local_t, segment.stop)
        if method == EXACT_METHOD:
            values, n_products, interpolant = _propagate_exact(segment, y, points)
        else:
            values, n_products, interpolant = _propagate_adaptive(
                segment, y, points, rtol=rtol, atol=atol, method=method, dense=dense_output
            )
        if dense_output:
            dense.append(interpolant)
        n_evaluations += n_products
        states[filled : filled + local_t.size] = values[: local_t.size]
        filled += local_t.size
        y = np.asarray(values[-1], dtype=complex)

    logger.debug("Integrated %d segment(s), %d evaluations", len(segments), n_evaluations)
    return PiecewiseSolution(
        times=t_eval,
        states=states,
        segments=list(segments),
        interpolants=dense,
        n_evaluations=n_evaluations,
    )
