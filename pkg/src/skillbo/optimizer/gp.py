"""Gaussian process regression with a Matern 5/2 ARD kernel.

Inputs are expected in the unit cube (see ParamSpace.encode). Targets are
standardized internally; hyperparameters are obtained by maximizing the log
marginal likelihood with multi-start L-BFGS on analytic gradients.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

SQRT5 = math.sqrt(5.0)

DEFAULT_BOUNDS = {
    "log_lengthscale": (math.log(0.05), math.log(20.0)),
    "log_signal": (math.log(0.05), math.log(20.0)),
    "log_noise": (math.log(1e-4), math.log(2.0)),
}


class GpError(Exception):
    pass


def _matern52(r: np.ndarray) -> np.ndarray:
    sr = SQRT5 * r
    return (1.0 + sr + sr * sr / 3.0) * np.exp(-sr)


class GpSurrogate:
    """Kernel: signal_variance * matern52(r) + noise_variance on the diagonal,
    with per-dimension length scales (automatic relevance determination)."""

    def __init__(
        self,
        lengthscales=None,
        signal_variance: float = 1.0,
        noise_variance: float = 1e-4,
        normalize: bool = True,
    ):
        if noise_variance <= 0:
            raise GpError("noise variance must be > 0")
        self.lengthscales = None if lengthscales is None else np.asarray(lengthscales, float)
        self.signal_variance = float(signal_variance)
        self.noise_variance = float(noise_variance)
        self.normalize = normalize
        self._fitted = False

    # -- kernel helpers ------------------------------------------------------

    def _sqdists(self, X1, X2) -> np.ndarray:
        # per-dimension squared differences, shape (d, n1, n2)
        return (X1.T[:, :, None] - X2.T[:, None, :]) ** 2

    def _r(self, d2_stack, ls) -> np.ndarray:
        s = np.tensordot(1.0 / ls**2, d2_stack, axes=(0, 0))
        np.maximum(s, 0.0, out=s)
        return np.sqrt(s)

    def kernel(self, X1, X2) -> np.ndarray:
        d2 = self._sqdists(np.asarray(X1, float), np.asarray(X2, float))
        return self.signal_variance * _matern52(self._r(d2, self.lengthscales))

    # -- fitting ---------------------------------------------------------------

    def fit(self, X, y, optimize: bool = True, restarts: int = 5, rng=None, maxiter: int = 60):
        X = np.atleast_2d(np.asarray(X, float))
        y = np.asarray(y, float).ravel()
        if len(y) < 2:
            raise GpError("need at least 2 training points")
        if X.shape[0] != len(y):
            raise GpError("X and y size mismatch")
        self.X = X
        if self.normalize:
            self.y_mean = float(np.mean(y))
            self.y_std = float(np.std(y))
            if self.y_std < 1e-12:
                self.y_std = 1.0
        else:
            self.y_mean, self.y_std = 0.0, 1.0
        self.y = (y - self.y_mean) / self.y_std
        d = X.shape[1]
        if self.lengthscales is None:
            self.lengthscales = np.full(d, 0.5)
        self._d2 = self._sqdists(X, X)
        if optimize:
            self._optimize_hypers(restarts, rng or np.random.default_rng(0), maxiter)
        self._factorize()
        self._fitted = True
        return self

    def _theta(self) -> np.ndarray:
        return np.concatenate(
            [
                np.log(self.lengthscales),
                [0.5 * math.log(self.signal_variance), 0.5 * math.log(self.noise_variance)],
            ]
        )

    def _set_theta(self, theta) -> None:
        d = len(self.lengthscales)
        self.lengthscales = np.exp(theta[:d])
        self.signal_variance = math.exp(2.0 * theta[d])
        self.noise_variance = math.exp(2.0 * theta[d + 1])

    def _neg_lml_and_grad(self, theta) -> tuple[float, np.ndarray]:
        d = self._d2.shape[0]
        ls = np.exp(theta[:d])
        sf2 = math.exp(2.0 * theta[d])
        sn2 = math.exp(2.0 * theta[d + 1])
        n = len(self.y)
        r = self._r(self._d2, ls)
        sr = SQRT5 * r
        e = np.exp(-sr)
        M = (1.0 + sr + sr * sr / 3.0) * e
        K = sf2 * M
        K[np.diag_indices_from(K)] += sn2
        L, jitter = self._chol_with_jitter(K)
        alpha = cho_solve((L, True), self.y)
        lml = -0.5 * float(self.y @ alpha) - float(np.sum(np.log(np.diag(L)))) - 0.5 * n * math.log(
            2.0 * math.pi
        )
        Kinv = cho_solve((L, True), np.eye(n))
        W = np.outer(alpha, alpha) - Kinv
        grad = np.empty(d + 2)
        # d K / d log ls_j = sf2 * (5/3) (1 + sr) e * d2_j / ls_j^2
        base = sf2 * (5.0 / 3.0) * (1.0 + sr) * e
        for j in range(d):
            dK = base * (self._d2[j] / ls[j] ** 2)
            grad[j] = 0.5 * float(np.sum(W * dK))
        grad[d] = 0.5 * float(np.sum(W * (2.0 * sf2 * M)))
        grad[d + 1] = 0.5 * float(np.trace(W)) * 2.0 * sn2
        return -lml, -grad

    def _chol_with_jitter(self, K) -> tuple[np.ndarray, float]:
        jitter = 0.0
        scale = float(np.mean(np.diag(K)))
        for _ in range(8):
            try:
                L = np.linalg.cholesky(K + jitter * np.eye(K.shape[0]))
                return L, jitter
            except np.linalg.LinAlgError:
                jitter = max(jitter * 10.0, 1e-10 * scale)
                if jitter > 1e-2 * scale:
                    break
        raise GpError("kernel matrix not positive definite even with jitter")

    def _optimize_hypers(self, restarts: int, rng: np.random.Generator, maxiter: int) -> None:
        d = self._d2.shape[0]
        lb_ls, ub_ls = DEFAULT_BOUNDS["log_lengthscale"]
        lb_sf, ub_sf = DEFAULT_BOUNDS["log_signal"]
        lb_sn, ub_sn = DEFAULT_BOUNDS["log_noise"]
        bounds = [(lb_ls, ub_ls)] * d + [
            (0.5 * lb_sf, 0.5 * ub_sf),
            (0.5 * lb_sn, 0.5 * ub_sn),
        ]
        starts = [self._theta()]
        for _ in range(restarts - 1):
            starts.append(np.array([rng.uniform(lo, hi) for lo, hi in bounds]))
        best = None
        for x0 in starts:
            x0 = np.clip(x0, [b[0] for b in bounds], [b[1] for b in bounds])
            try:
                res = minimize(
                    self._neg_lml_and_grad,
                    x0,
                    jac=True,
                    method="L-BFGS-B",
                    bounds=bounds,
                    options={"maxiter": maxiter},
                )
            except GpError:
                continue
            if best is None or res.fun < best.fun:
                best = res
        if best is None:
            raise GpError("hyperparameter optimization failed from every start")
        self._set_theta(best.x)

    def _factorize(self) -> None:
        K = self.kernel(self.X, self.X)
        K[np.diag_indices_from(K)] += self.noise_variance
        self._L, self._jitter = self._chol_with_jitter(K)
        self._alpha = cho_solve((self._L, True), self.y)

    # -- prediction -------------------------------------------------------------

    def predict(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance (original target units)."""
        if not self._fitted:
            raise GpError("predict before fit")
        Xq = np.atleast_2d(np.asarray(Xq, float))
        Ks = self.kernel(self.X, Xq)  # (n, m)
        mu = Ks.T @ self._alpha
        v = solve_triangular(self._L, Ks, lower=True)
        var = self.signal_variance + self.noise_variance - np.sum(v * v, axis=0)
        np.maximum(var, 0.0, out=var)
        return self.y_mean + self.y_std * mu, (self.y_std**2) * var

    def log_marginal_likelihood(self) -> float:
        n = len(self.y)
        return (
            -0.5 * float(self.y @ self._alpha)
            - float(np.sum(np.log(np.diag(self._L))))
            - 0.5 * n * math.log(2.0 * math.pi)
        )

    @property
    def signal_variance_raw(self) -> float:
        """Signal variance in original target units."""
        return self.signal_variance * self.y_std**2

    @property
    def noise_variance_raw(self) -> float:
        return self.noise_variance * self.y_std**2
