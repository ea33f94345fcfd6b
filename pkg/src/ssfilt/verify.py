"""Independent oracles and generators for testing the filter and its gradients.

Everything here is deliberately simple: literal difference equations,
explicit matrix powers and central differences. None of it touches the
scan or gradient code paths except through their public forward call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grad import filter_backward
from .model import GradientBundle, StateSpaceSystem, TransferFunction, tf_to_ss
from .scan import SEQUENTIAL, ScanConfig, filter_forward

DOUBLE_TOLERANCES = (1e-5, 1e-8)
SINGLE_TOLERANCES = (1e-2, 1e-4)
GRAD_NAMES = ("dA", "dB", "dC", "dD", "dv0", "dx")


def relative_error(actual, expected) -> float:
    """``max|actual - expected| / max|expected|`` (absolute error when expected is zero)."""
    actual = np.asarray(actual, dtype=complex if np.iscomplexobj(actual) else float)
    expected = np.asarray(expected, dtype=float)
    scale = np.max(np.abs(expected)) if expected.size else 0.0
    err = np.max(np.abs(actual - expected)) if expected.size else 0.0
    return float(err / scale) if scale > 0 else float(err)


def oracle_df_filter(tf: TransferFunction, x) -> np.ndarray:
    """Sample-by-sample direct form with zero history."""
    b, a = [float(c) for c in tf.b], [float(c) for c in tf.a]
    M = len(a) - 1
    w = []
    y = []
    for n, xn in enumerate(np.asarray(x, dtype=float)):
        past = lambda k: w[n - k] if n - k >= 0 else 0.0  # noqa: E731
        wn = float(xn)
        for k in range(1, M + 1):
            wn -= a[k] * past(k)
        w.append(wn)
        yn = b[0] * wn
        for k in range(1, M + 1):
            yn += b[k] * past(k)
        y.append(yn)
    return np.array(y)


def oracle_unrolled_state(A, v0, z, n: int) -> np.ndarray:
    """``v(n+1) = A^(n+1) v0 + sum_{m<=n} A^(n-m) z(m)`` by explicit powers."""
    A = np.asarray(A, dtype=float)
    z = np.asarray(z, dtype=float)
    state = np.linalg.matrix_power(A, n + 1) @ np.asarray(v0, dtype=float)
    for m in range(n + 1):
        state = state + np.linalg.matrix_power(A, n - m) @ z[m]
    return state


def oracle_kronecker_dA(sys: StateSpaceSystem, states, dy) -> np.ndarray:
    """``dL/dA`` for ``L = <dy, y>`` assembled from column-stacked Jacobians.

    Uses ``dv(m)/dvec(A) = sum_{n<m} A^(m-n-1) (v(n)^T kron I)``.
    """
    A = np.asarray(sys.A, dtype=float)
    C = np.asarray(sys.C, dtype=float)
    states = np.asarray(states, dtype=float)
    M = A.shape[0]
    eye = np.eye(M)
    grad_vec = np.zeros(M * M)
    for m in range(1, len(dy)):
        jac = np.zeros((M, M * M))
        for n in range(m):
            jac += np.linalg.matrix_power(A, m - n - 1) @ np.kron(states[n][None, :], eye)
        grad_vec += dy[m] * (C @ jac)
    return grad_vec.reshape(M, M, order="F")


def oracle_dv0(sys: StateSpaceSystem, dy) -> np.ndarray:
    """``dL/dv(0) = sum_{n>=1} (A^T)^n C dy(n) + C dy(0)`` by explicit powers."""
    A = np.asarray(sys.A, dtype=float)
    C = np.asarray(sys.C, dtype=float)
    total = C * dy[0]
    for n in range(1, len(dy)):
        total = total + np.linalg.matrix_power(A.T, n) @ C * dy[n]
    return total


def _loss(sys, v0, x, dy) -> float:
    y, _ = filter_forward(sys, v0, x, SEQUENTIAL)
    return math.fsum(dy * y)


def finite_difference_grads(sys: StateSpaceSystem, v0, x, dy, h: float = 1e-6) -> GradientBundle:
    """Central differences of ``L = <dy, y>`` for every parameter and input.

    Each scalar ``t`` is stepped by ``h * max(1, |t|)``. Always double precision.
    """
    sys = sys.astype(np.float64)
    x = np.asarray(x, dtype=float)
    dy = np.asarray(dy, dtype=float)
    v0 = np.zeros(sys.M) if v0 is None else np.asarray(v0, dtype=float)
    params = {
        "A": sys.A.copy(),
        "B": sys.B.copy(),
        "C": sys.C.copy(),
        "D": np.array(float(sys.D)),
        "v0": v0.copy(),
        "x": x.copy(),
    }

    def evaluate(p):
        s = StateSpaceSystem(p["A"], p["B"], p["C"], p["D"])
        return _loss(s, p["v0"], p["x"], dy)

    grads = {}
    for name, value in params.items():
        g = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            orig = value[idx]
            step = h * max(1.0, abs(orig))
            value[idx] = orig + step
            f_plus = evaluate(params)
            value[idx] = orig - step
            f_minus = evaluate(params)
            value[idx] = orig
            g[idx] = (f_plus - f_minus) / (2 * step)
        grads[name] = g
    return GradientBundle(
        dA=grads["A"], dB=grads["B"], dC=grads["C"], dD=float(grads["D"]), dv0=grads["v0"], dx=grads["x"]
    )


@dataclass
class ParamCheck:
    name: str
    count: int
    max_rel: float  # max|analytic - numeric| / max|numeric|
    max_abs: float
    passed: bool


@dataclass
class GradCheckReport:
    """Per-component comparison of analytic and numerical gradients.

    A component passes when its largest absolute error is within ``atol``
    or that error relative to the component's largest magnitude is within
    ``rtol``.
    """

    rtol: float
    atol: float
    params: list[ParamCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.params)

    def worst(self) -> ParamCheck:
        return max(self.params, key=lambda p: (not p.passed, p.max_rel))

    def format(self) -> str:
        lines = [f"{'param':<6}{'count':>7}{'max_rel':>12}{'max_abs':>12}  status"]
        for p in self.params:
            lines.append(
                f"{p.name:<6}{p.count:>7}{p.max_rel:>12.3e}{p.max_abs:>12.3e}  {'ok' if p.passed else 'FAIL'}"
            )
        lines.append(f"thresholds: rel {self.rtol:g} / abs {self.atol:g}")
        lines.append("PASS" if self.passed else f"FAIL: worst offender {self.worst().name}")
        return "\n".join(lines)


def compare_bundles(analytic: GradientBundle, numeric: GradientBundle, rtol: float, atol: float) -> GradCheckReport:
    report = GradCheckReport(rtol=rtol, atol=atol)
    for name in GRAD_NAMES:
        a = np.asarray(getattr(analytic, name), dtype=float).ravel()
        f = np.asarray(getattr(numeric, name), dtype=float).ravel()
        max_abs = float(np.max(np.abs(a - f)))
        scale = float(np.max(np.abs(f)))
        max_rel = max_abs / scale if scale > 0 else (0.0 if max_abs == 0 else math.inf)
        finite = bool(np.all(np.isfinite(a)))
        report.params.append(
            ParamCheck(
                name=name,
                count=a.size,
                max_rel=max_rel,
                max_abs=max_abs,
                passed=finite and (max_abs <= atol or max_rel <= rtol),
            )
        )
    return report


def grad_check(
    sys: StateSpaceSystem,
    v0,
    x,
    dy,
    cfg: ScanConfig = SEQUENTIAL,
    precision=np.float64,
    tolerances: tuple[float, float] | None = None,
    h: float = 1e-6,
    corrupt: str | None = None,
) -> GradCheckReport:
    """Analytic gradients at ``precision`` against double-precision central differences.

    ``corrupt`` names a component to perturb before comparison; it exists
    so tests can confirm the check fails when it should.
    """
    precision = np.dtype(precision)
    if tolerances is None:
        tolerances = DOUBLE_TOLERANCES if precision == np.float64 else SINGLE_TOLERANCES
    rtol, atol = tolerances
    x = np.asarray(x, dtype=float)
    v0 = np.zeros(sys.M) if v0 is None else np.asarray(v0, dtype=float)
    _, tape = filter_forward(sys.astype(precision), v0.astype(precision), x.astype(precision), cfg)
    analytic = filter_backward(tape, np.asarray(dy, dtype=precision), cfg)
    if corrupt is not None:
        bad = np.array(getattr(analytic, corrupt), dtype=float)
        bad.flat[0] += 1.0 + abs(bad.flat[0])
        analytic = GradientBundle(**{**{n: getattr(analytic, n) for n in GRAD_NAMES}, corrupt: bad})
    numeric = finite_difference_grads(sys, v0, x, dy, h)
    return compare_bundles(analytic, numeric, rtol, atol)


# -- generators -----------------------------------------------------------------------------

MIN_POLE_RADIUS = 0.05


def random_poles(M: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """``M`` poles, conjugate-paired, area-uniform on ``MIN_POLE_RADIUS <= |p| <= radius``."""
    if not 0 < radius < 1:
        raise ValueError("radius must lie in (0, 1)")
    lo = min(MIN_POLE_RADIUS, radius)
    poles = []
    for _ in range(M // 2):
        r = math.sqrt(rng.uniform(lo * lo, radius * radius))
        theta = rng.uniform(0.0, math.pi)
        p = r * np.exp(1j * theta)
        poles.extend([p, np.conj(p)])
    if M % 2:
        poles.append(rng.choice([-1.0, 1.0]) * rng.uniform(lo, radius))
    return np.array(poles, dtype=complex)


def random_stable_tf(M: int, radius: float = 0.9, seed: int = 0) -> TransferFunction:
    rng = np.random.default_rng(seed)
    poles = random_poles(M, radius, rng)
    a = np.real(np.poly(poles))
    b = rng.normal(size=M + 1)
    return TransferFunction(b, a)


def random_stable_system(M: int, radius: float = 0.9, seed: int = 0) -> StateSpaceSystem:
    """Companion-form system with seeded random poles inside ``|p| <= radius``."""
    return tf_to_ss(random_stable_tf(M, radius, seed))
