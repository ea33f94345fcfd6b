"""Fit transfer-function coefficients to a target output by gradient descent.

The state-space gradients are mapped back onto ``(b, a)`` through the fixed
structure of the companion realization: ``a`` enters ``A`` only on its
first row and ``C = b[1:] - a[1:] * b[0]``, ``D = b[0]``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .grad import filter_backward
from .model import GradientBundle, TransferFunction, tf_to_ss
from .scan import SEQUENTIAL, ScanConfig, filter_forward

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    def __init__(self, message, iteration, coefficients):
        super().__init__(message)
        self.iteration = iteration
        self.coefficients = coefficients


@dataclass
class FitConfig:
    learning_rate: float = 1e-2
    iterations: int = 5000
    optimizer: str = "adam"  # "adam" or "gd"
    tol: float = 1e-20  # stop once the loss falls below this
    patience: int = 50  # iterations without improvement before halving the step
    seed: int = 0
    target_tf: TransferFunction | None = None
    target_file: str | None = None

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.optimizer not in ("adam", "gd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class FitResult:
    tf: TransferFunction
    loss: float
    iterations: int
    history: list[float] = field(default_factory=list, repr=False)


def coefficient_grads(tf: TransferFunction, bundle: GradientBundle):
    """Chain ``(dA, dC, dD)`` onto ``(db, da)``; ``da[0]`` is always zero."""
    M = tf.order
    b, a = tf.b, tf.a
    dC = np.asarray(bundle.dC, dtype=float)
    db = np.zeros(M + 1)
    da = np.zeros(M + 1)
    db[1:] = dC
    da[1:] = -np.asarray(bundle.dA, dtype=float)[0, :] - b[0] * dC
    db[0] = float(bundle.dD) - np.dot(a[1:], dC)
    return db, da


def mse_and_grads(tf: TransferFunction, x, target, cfg: ScanConfig = SEQUENTIAL):
    """Mean squared error of ``tf`` on ``x`` and its gradient in ``(b, a)``."""
    y, tape = filter_forward(tf_to_ss(tf), None, x, cfg)
    resid = y - target
    loss = float(np.mean(resid * resid))
    bundle = filter_backward(tape, 2.0 * resid / resid.size, cfg)
    db, da = coefficient_grads(tf, bundle)
    return loss, db, da


def fit(x, target, init: TransferFunction, config: FitConfig, cfg: ScanConfig = SEQUENTIAL) -> FitResult:
    """Minimize the output MSE over ``b`` and ``a[1:]`` starting from ``init``.

    Raises ``DivergenceError`` when the loss stops being finite.
    """
    x = np.asarray(x, dtype=float)
    target = np.asarray(target, dtype=float)
    M = init.order
    theta = np.concatenate([init.b, init.a[1:]])
    m = np.zeros_like(theta)
    s = np.zeros_like(theta)
    beta1, beta2, eps = 0.9, 0.999, 1e-12
    history = []
    lr = config.learning_rate
    best, stale = math.inf, 0

    def unpack(t):
        return TransferFunction(t[: M + 1], np.concatenate([[1.0], t[M + 1 :]]))

    it = moment_it = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            tf = unpack(theta)
            try:
                loss, db, da = mse_and_grads(tf, x, target, cfg)
            except ValueError:
                loss = math.nan
            history.append(loss)
            if not math.isfinite(loss):
                raise DivergenceError(f"loss became non-finite at iteration {it}", it, tf)
            if loss <= config.tol or it >= config.iterations:
                return FitResult(tf, loss, it, history)
            if loss < best:
                best, best_theta, best_grad, stale = loss, theta, np.concatenate([db, da[1:]]), 0
            else:
                stale += 1
                if stale >= config.patience:
                    # restart from the best point with a smaller step
                    theta, lr, stale, moment_it = best_theta, 0.5 * lr, 0, 0
                    m[:] = 0.0
                    s[:] = 0.0
                    db, da = best_grad[: M + 1], np.concatenate([[0.0], best_grad[M + 1 :]])
            grad = np.concatenate([db, da[1:]])
            it += 1
            moment_it += 1
            if config.optimizer == "gd":
                theta = theta - lr * grad
            else:
                m = beta1 * m + (1 - beta1) * grad
                s = beta2 * s + (1 - beta2) * grad * grad
                m_hat = m / (1 - beta1**moment_it)
                s_hat = s / (1 - beta2**moment_it)
                theta = theta - lr * m_hat / (np.sqrt(s_hat) + eps)
            if it % 500 == 0:
                log.debug("iteration %d loss %.3e", it, loss)
