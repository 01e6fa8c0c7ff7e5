"""
Third-order TVD Runge-Kutta time integration with CFL-based step selection.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence, TypeVar

from ..errors import ConfigError, NumericalBlowupError

logger = logging.getLogger(__name__)


class State(Protocol):
    """Anything the stepper can advance: closed under + and scalar *, with a finiteness check."""

    def __add__(self, other): ...

    def __sub__(self, other): ...

    def __rmul__(self, scalar: float): ...

    def is_finite(self) -> bool: ...


S = TypeVar("S", bound=State)
Rhs = Callable[[S, float], S]
Observer = Callable[[int, float, S], None]


@dataclass
class StepControl:
    """Time-step control: Δt = cfl / sum_m c_m / h_m^p with h_m = width_m 2^-N."""
    final_time: float
    k: int
    N: int
    speeds: Sequence[float]
    widths: Optional[Sequence[float]] = None
    cfl: float = 0.1

    @property
    def d(self) -> int:
        return len(self.speeds)


def cfl_dt(control: StepControl) -> float:
    """
    CFL time step.

    p = 1 for k <= 2 and p = (k+1)/3 for k >= 3, which is the 4/3-power rule at k = 3.
    """
    widths = control.widths if control.widths is not None else [1.0] * control.d
    if any(c < 0 for c in control.speeds):
        raise ConfigError(f"Speeds must be non-negative, got {list(control.speeds)}", {"speeds": "negative"})
    power = 1.0 if control.k <= 2 else (control.k + 1) / 3.0
    total = sum(c / (w * 2.0 ** -control.N) ** power for c, w in zip(control.speeds, widths))
    if total <= 0:
        raise ConfigError("Cannot choose a time step: total speed is zero", {"speeds": "all zero"})
    return control.cfl / total


def _checked(state: S, stage: int, t: float) -> S:
    if not state.is_finite():
        raise NumericalBlowupError(f"Non-finite coefficients after RK stage {stage}", stage=stage, last_good_time=t)
    return state


def rk3_step(u: S, dt: float, rhs: Rhs, t: float = 0.0) -> S:
    """
    One Shu-Osher TVD-RK3 step; rhs(u, t) is evaluated at t, t + dt and t + dt/2.

    u1 = u + dt R(u)
    u2 = 3/4 u + 1/4 u1 + 1/4 dt R(u1)
    u_next = 1/3 u + 2/3 u2 + 2/3 dt R(u2)
    """
    if dt <= 0:
        raise ConfigError(f"Time step must be positive, got {dt}", {"dt": "non-positive"})
    u1 = _checked(u + dt * rhs(u, t), 1, t)
    u2 = _checked(u + 0.25 * ((u1 - u) + dt * rhs(u1, t + dt)), 2, t)
    return _checked(u + (2.0 / 3.0) * ((u2 - u) + dt * rhs(u2, t + 0.5 * dt)), 3, t)


@dataclass
class IntegrationResult:
    state: object
    time: float
    steps: int
    dt: float
    wall_time: float = 0.0
    times: list[float] = field(default_factory=list)


def integrate(
    u0: S,
    rhs: Rhs,
    control: StepControl,
    observers: Sequence[Observer] = (),
    stride: int = 1,
    dt: Optional[float] = None,
    start_time: float = 0.0,
    observe_start: bool = True,
) -> IntegrationResult:
    """
    Advance u0 from start_time to control.final_time.

    Observers are called as observer(step, t, state) at the start (unless observe_start
    is False), every `stride` steps and at the final time. The last step is shortened to
    land exactly on the final time.
    """
    final_time = control.final_time
    started = time.perf_counter()
    if final_time <= start_time:
        if observe_start:
            for observer in observers:
                observer(0, start_time, u0)
        return IntegrationResult(state=u0, time=start_time, steps=0, dt=0.0, times=[start_time])

    dt = dt or cfl_dt(control)
    span = final_time - start_time
    logger.info(f"Integrating t={start_time:g}..{final_time:g} with dt={dt:.6g} (~{int(span / dt) + 1} steps)")

    u, t, step = u0, start_time, 0
    times = [start_time]
    if observe_start:
        for observer in observers:
            observer(step, t, u)

    tol = 1e-12 * max(1.0, abs(final_time))
    while final_time - t > tol:
        h = min(dt, final_time - t)
        last = final_time - (t + h) <= tol
        if last:
            h = final_time - t
        try:
            u = rk3_step(u, h, rhs, t)
        except NumericalBlowupError as exc:
            logger.error(f"Blow-up at step {step + 1}, stage {exc.stage}; last good time {t:g}")
            raise NumericalBlowupError(str(exc), stage=exc.stage, last_good_time=t) from exc
        step += 1
        t = final_time if last else t + h
        logger.debug(f"step {step}: t={t:.6g}")
        if step % stride == 0 or last:
            times.append(t)
            for observer in observers:
                observer(step, t, u)

    if times[-1] != t:
        times.append(t)
        for observer in observers:
            observer(step, t, u)

    wall = time.perf_counter() - started
    logger.info(f"Reached t={t:g} after {step} steps in {wall:.2f}s")
    return IntegrationResult(state=u, time=t, steps=step, dt=dt, wall_time=wall, times=times)
