"""Multi-objective Bayesian optimization via random scalarizations.

Each iteration draws scalarization weights uniformly from the simplex,
collapses the (max-frame) objective history into scalar targets, fits the GP
surrogate and proposes the candidate with the highest Expected Improvement
over a quasi-random candidate set plus local refinement.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .acquisition import expected_improvement
from .gp import GpSurrogate
from .pareto import non_dominated_indices
from .space import ParamSpace

TCHEBYSHEV_AUGMENT = 0.05


@dataclass
class MoboConfig:
    warmup: int = 20
    candidates: int = 5000
    refine_top: int = 10
    refine_samples: int = 20
    refine_rounds: int = 2
    refine_sigma: float = 0.05
    scalarization: str = "tchebyshev"  # or "weighted-sum"
    gp_restarts: int = 5
    gp_maxiter: int = 60


def _normalize_objectives(Y: np.ndarray) -> np.ndarray:
    lo = Y.min(axis=0)
    hi = Y.max(axis=0)
    span = hi - lo
    span[span < 1e-12] = 1.0
    return (Y - lo) / span


def scalarize(Y, weights, method: str = "tchebyshev") -> np.ndarray:
    """Collapse max-frame objective vectors into scalar targets in [0, 1]-ish.

    Tchebyshev (augmented): min_i w_i yhat_i + alpha * sum_i w_i yhat_i, on
    min-max normalized objectives. With one objective this is a monotone
    transform, so the loop degenerates to standard single-objective EI.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    w = np.asarray(weights, dtype=float)
    Yn = _normalize_objectives(Y)
    prod = Yn * w
    if method == "tchebyshev":
        return prod.min(axis=1) + TCHEBYSHEV_AUGMENT * prod.sum(axis=1)
    if method == "weighted-sum":
        return prod.sum(axis=1)
    raise ValueError(f"unknown scalarization {method!r}")


def _sobol(dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    seed = int(rng.integers(0, 2**31 - 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # n not a power of two is fine here
        return qmc.Sobol(dim, scramble=True, seed=seed).random(n)


def suggest(
    encoded_X,
    Y,
    space: ParamSpace,
    rng: np.random.Generator,
    config: MoboConfig | None = None,
) -> dict:
    """Next configuration to evaluate.

    The first ``warmup`` suggestions are uniform in the space; afterwards a
    GP fitted on randomly scalarized objectives is maximized by EI over
    Sobol candidates with local refinement around the best ones.
    """
    config = config or MoboConfig()
    n = 0 if encoded_X is None else len(encoded_X)
    if n < config.warmup or n < 2:
        return space.sample(rng)

    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    p = Y.shape[1]
    weights = rng.dirichlet(np.ones(p))
    targets = scalarize(Y, weights, config.scalarization)

    gp = GpSurrogate()
    gp.fit(
        np.asarray(encoded_X, dtype=float),
        targets,
        restarts=config.gp_restarts,
        rng=rng,
        maxiter=config.gp_maxiter,
    )
    best = float(np.max(targets))

    cand = _sobol(space.dim, config.candidates, rng)
    mu, var = gp.predict(cand)
    ei = expected_improvement(mu, np.sqrt(var), best)
    top = np.argsort(ei)[-config.refine_top :]
    pool = cand[top]
    pool_ei = ei[top]
    for _ in range(config.refine_rounds):
        local = np.clip(
            pool[:, None, :]
            + rng.normal(0.0, config.refine_sigma, (len(pool), config.refine_samples, space.dim)),
            0.0,
            1.0,
        ).reshape(-1, space.dim)
        mu_l, var_l = gp.predict(local)
        ei_l = expected_improvement(mu_l, np.sqrt(var_l), best)
        merged = np.vstack([pool, local])
        merged_ei = np.concatenate([pool_ei, ei_l])
        keep = np.argsort(merged_ei)[-config.refine_top :]
        pool = merged[keep]
        pool_ei = merged_ei[keep]
    return space.decode(pool[int(np.argmax(pool_ei))])


class MultiObjectiveBO:
    """Ask/tell loop state: history of encoded configurations and objective
    vectors (maximization frame)."""

    def __init__(self, space: ParamSpace, n_objectives: int, config: MoboConfig | None = None):
        self.space = space
        self.n_objectives = int(n_objectives)
        self.config = config or MoboConfig()
        self.configs: list[dict] = []
        self.encoded: list[np.ndarray] = []
        self.Y: list[np.ndarray] = []

    def __len__(self):
        return len(self.configs)

    def ask(self, rng: np.random.Generator) -> dict:
        X = np.array(self.encoded) if self.encoded else None
        Y = np.array(self.Y) if self.Y else None
        return suggest(X, Y, self.space, rng, self.config)

    def tell(self, configuration: dict, objectives) -> None:
        y = np.asarray(objectives, dtype=float).ravel()
        if y.shape != (self.n_objectives,):
            raise ValueError(
                f"objective vector must have {self.n_objectives} entries, got {y.shape}"
            )
        self.configs.append(dict(configuration))
        self.encoded.append(self.space.encode(configuration))
        self.Y.append(y)

    def pareto_indices(self) -> list[int]:
        if not self.Y:
            return []
        return non_dominated_indices(np.array(self.Y), maximize=True)
