"""Adaptive Dormand-Prince 5(4) integrator with quartic dense output.

Controller conventions follow the de-facto standard for this pair: the
per-component error scale is ``atol + rtol * max(|y|, |y_new|)``, a step
is accepted when the weighted RMS error is at most one, and the next step
is ``h * clip(0.9 * err**(-1/5), 0.2, 10)`` (growth additionally capped at
1 right after a rejection). The first-same-as-last property is exploited,
so an attempted step costs six right-hand-side evaluations.
Requested output times are filled from the standard quartic interpolant of
each accepted step, never by forcing steps onto them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationError

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -0.2  # embedded order 4 -> -1/(4+1)

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = np.array([
    [0, 0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0],
])
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# quartic dense-output coefficients for the 5(4) pair
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class SolverStats:
    naccept: int = 0
    nreject: int = 0
    nfev: int = 0

    def as_dict(self) -> dict:
        return {"naccept": self.naccept, "nreject": self.nreject, "nfev": self.nfev}


@dataclass
class IntegrationResult:
    """Samples at accepted steps and/or requested output times."""

    t: np.ndarray  # (m,) strictly increasing, t[0] = t0, t[-1] = tf
    y: np.ndarray  # (m, dim)
    accepted: np.ndarray  # (m,) bool, True where the sample is a solver step
    requested: np.ndarray  # (m,) bool, True where the sample was asked for
    stats: SolverStats = field(default_factory=SolverStats)


def _rms(x: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    return float(np.linalg.norm(x) / math.sqrt(x.size))


def _initial_step(fun, t0, y0, f0, interval, rtol, atol, stats):
    scale = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, interval)
    f1 = fun(t0 + h0, y0 + h0 * f0)
    stats.nfev += 1
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, interval)


def integrate(
    fun,
    t0: float,
    y0: np.ndarray,
    tf: float,
    rtol: float = 1e-3,
    atol: float = 1e-6,
    output_times=None,
    store_steps: bool = True,
) -> IntegrationResult:
    """Integrate y' = fun(t, y) from t0 to tf.

    Parameters
    ----------
    fun : callable
        Right-hand side ``fun(t, y) -> dy/dt`` with ``y`` a 1-d float array.
    t0, tf : float
        Integration window, ``tf > t0``.
    y0 : ndarray
        Initial state.
    rtol, atol : float
        Relative/absolute tolerances of the mixed error norm.
    output_times : sequence of float, optional
        Times inside ``[t0, tf]`` to sample through the dense interpolant
        (steps are never forced onto them).
    store_steps : bool
        Keep every accepted step in the result. With it off, only t0, the
        requested times and tf are kept.

    Returns
    -------
    IntegrationResult
        Strictly increasing samples; first at t0, last at tf.

    Raises
    ------
    IntegrationError
        On step-size underflow (a stiffness signal) or a non-finite
        right-hand side at an accepted point.
    """
    if rtol <= 0 or atol <= 0:
        raise ValueError("rtol and atol must be positive")
    if not tf > t0:
        raise ValueError("tf must exceed t0")
    y0 = np.asarray(y0, dtype=np.float64)
    if output_times is None:
        pending = []
    else:
        pending = sorted(float(t) for t in output_times)
        if pending and (pending[0] < t0 or pending[-1] > tf):
            raise ValueError("output_times must lie within [t0, tf]")
        if len(set(pending)) != len(pending):
            raise ValueError("output_times must be unique")

    stats = SolverStats()
    f = fun(t0, y0)
    stats.nfev += 1
    f = np.asarray(f, dtype=np.float64)
    if not np.all(np.isfinite(f)):
        raise IntegrationError("non-finite right-hand side at the initial state")

    ts: list[float] = [t0]
    ys: list[np.ndarray] = [y0.copy()]
    acc: list[bool] = [True]
    req: list[bool] = [bool(pending) and pending[0] == t0]
    if req[0]:
        pending.pop(0)

    h_abs = _initial_step(fun, t0, y0, f, tf - t0, rtol, atol, stats)
    t = t0
    y = y0.copy()
    K = np.empty((7, y0.size), dtype=np.float64)

    while t < tf:
        min_step = 10.0 * abs(np.nextafter(t, np.inf) - t)
        if h_abs < min_step:
            h_abs = min_step
        step_accepted = False
        step_rejected = False
        while not step_accepted:
            if h_abs < min_step:
                raise IntegrationError(
                    f"step size underflow at t={t:.6g} (system too stiff for the "
                    f"explicit pair at rtol={rtol:g}, atol={atol:g})"
                )
            h = min(h_abs, tf - t)
            t_new = t + h
            if t_new > tf:
                t_new = tf
                h = t_new - t
            h_abs = abs(h)

            K[0] = f
            for s in range(1, 6):
                dy = h * (K[:s].T @ A[s, :s])
                K[s] = fun(t + C[s] * h, y + dy)
            y_new = y + h * (K[:6].T @ B)
            f_new = np.asarray(fun(t_new, y_new), dtype=np.float64)
            K[6] = f_new
            stats.nfev += 6

            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            error_norm = _rms((K.T @ E) * h / scale)
            if not np.isfinite(error_norm):
                h_abs *= MIN_FACTOR
                step_rejected = True
                stats.nreject += 1
                continue
            if error_norm <= 1.0:
                if error_norm == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * error_norm ** ERROR_EXPONENT)
                if step_rejected:
                    factor = min(1.0, factor)
                h_abs *= factor
                step_accepted = True
            else:
                h_abs *= max(MIN_FACTOR, SAFETY * error_norm ** ERROR_EXPONENT)
                step_rejected = True
                stats.nreject += 1

        # fill requested outputs inside (t, t_new) from the dense interpolant
        if pending and pending[0] < t_new:
            Q = K.T @ P
            while pending and pending[0] < t_new:
                tau = pending.pop(0)
                x = (tau - t) / h
                p = np.array([x, x * x, x ** 3, x ** 4])
                ts.append(tau)
                ys.append(y + h * (Q @ p))
                acc.append(False)
                req.append(True)

        hit_requested = bool(pending) and pending[0] == t_new
        if hit_requested:
            pending.pop(0)
        if store_steps or hit_requested or t_new == tf:
            ts.append(t_new)
            ys.append(y_new)
            acc.append(True)
            req.append(hit_requested)

        stats.naccept += 1
        t = t_new
        y = y_new
        f = f_new

    return IntegrationResult(
        t=np.array(ts),
        y=np.array(ys),
        accepted=np.array(acc, dtype=bool),
        requested=np.array(req, dtype=bool),
        stats=stats,
    )
