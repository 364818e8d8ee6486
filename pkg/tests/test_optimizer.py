import numpy as np
import pytest
from scipy.stats import kstest

from skillbo.optimizer.mobo import MoboConfig, MultiObjectiveBO, scalarize, suggest
from skillbo.optimizer.space import ParamSpace, Parameter, SpaceError

MIXED = ParamSpace(
    [
        Parameter("x", "real", bounds=(-2.0, 3.0)),
        Parameter("n", "integer", bounds=(0, 7)),
        Parameter("lvl", "ordinal", values=("low", "mid", "high")),
        Parameter("mode", "categorical", values=("a", "b", "c", "d")),
    ]
)


# --- space ---------------------------------------------------------------------


def test_space_dimension_counts_one_hot():
    assert MIXED.dim == 1 + 1 + 1 + 4


def test_encode_decode_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(200):
        cfg = MIXED.sample(rng)
        assert MIXED.contains(cfg)
        again = MIXED.decode(MIXED.encode(cfg))
        assert again == cfg


def test_integer_rounding_after_optimization():
    space = ParamSpace([Parameter("n", "integer", bounds=(0, 10))])
    assert space.decode([0.349])["n"] == 3
    assert space.decode([0.35])["n"] == 4
    assert space.decode([1.2])["n"] == 10  # clamped


def test_bounds_validation():
    with pytest.raises(SpaceError):
        Parameter("x", "real", bounds=(1.0, 1.0))
    with pytest.raises(SpaceError):
        Parameter("x", "real", bounds=(0.0, float("inf")))
    with pytest.raises(SpaceError):
        Parameter("c", "categorical", values=())
    with pytest.raises(SpaceError):
        ParamSpace([])


# --- warm-up distribution ----------------------------------------------------------


def test_warmup_suggestions_uniform_per_coordinate():
    space = ParamSpace(
        [Parameter("a", "real", bounds=(-1.0, 2.0)), Parameter("b", "real", bounds=(5.0, 9.0))]
    )
    rng = np.random.default_rng(123)
    draws = np.array(
        [[space.sample(rng)["a"], space.sample(rng)["b"]] for _ in range(10_000)]
    )
    assert kstest((draws[:, 0] + 1.0) / 3.0, "uniform").pvalue > 0.01
    assert kstest((draws[:, 1] - 5.0) / 4.0, "uniform").pvalue > 0.01


def test_suggest_uses_uniform_warmup_before_budget():
    rng = np.random.default_rng(7)
    cfg = MoboConfig(warmup=5)
    X, Y = [], []
    for _ in range(4):
        c = suggest(np.array(X) if X else None, np.array(Y) if Y else None, MIXED, rng, cfg)
        assert MIXED.contains(c)
        X.append(MIXED.encode(c))
        Y.append([rng.normal(), rng.normal()])


def test_suggestions_in_bounds_and_typed_after_warmup():
    rng = np.random.default_rng(11)
    cfg = MoboConfig(warmup=4, candidates=256, gp_restarts=2, gp_maxiter=25)
    X, Y = [], []
    for i in range(10):
        c = suggest(
            np.array(X) if X else None, np.array(Y) if Y else None, MIXED, rng, cfg
        )
        assert MIXED.contains(c)
        assert isinstance(c["n"], int)
        assert c["mode"] in ("a", "b", "c", "d")
        X.append(MIXED.encode(c))
        Y.append([rng.normal(), rng.normal()])


# --- scalarization -------------------------------------------------------------------


def test_scalarize_single_objective_monotone():
    Y = np.array([[-3.0], [0.0], [2.0], [7.0]])
    s = scalarize(Y, np.array([1.0]))
    assert np.all(np.diff(s) > 0)


def test_scalarize_tchebyshev_prefers_balanced_points():
    Y = np.array([[1.0, 0.0], [0.0, 1.0], [0.9, 0.9]])
    s = scalarize(Y, np.array([0.5, 0.5]), "tchebyshev")
    assert np.argmax(s) == 2


def test_scalarize_weighted_sum_option():
    Y = np.array([[1.0, 0.0], [0.0, 1.0]])
    s = scalarize(Y, np.array([1.0, 0.0]), "weighted-sum")
    assert s[0] > s[1]


def test_scalarize_unknown_method():
    with pytest.raises(ValueError):
        scalarize(np.array([[1.0]]), np.array([1.0]), "geometric")


# --- single-objective behavior ----------------------------------------------------------


def quadratic_min(x):
    return (x - 0.3) ** 2


def run_bo_1d(seed, evaluations=40, warmup=20):
    space = ParamSpace([Parameter("x", "real", bounds=(0.0, 1.0))])
    bo = MultiObjectiveBO(space, 1, MoboConfig(warmup=warmup, candidates=512, gp_restarts=3, gp_maxiter=40))
    rng_master = seed
    best_x, best_y = None, -np.inf
    for it in range(evaluations):
        rng = np.random.default_rng((rng_master, it))
        cfg = bo.ask(rng)
        y = -quadratic_min(cfg["x"])  # maximization frame
        bo.tell(cfg, [y])
        if y > best_y:
            best_x, best_y = cfg["x"], y
    return best_x


def test_bo_finds_1d_quadratic_optimum():
    # dense-grid oracle for the synthetic function's argmin
    grid = np.linspace(0, 1, 100_001)
    assert abs(grid[np.argmin(quadratic_min(grid))] - 0.3) < 1e-4
    hits = sum(abs(run_bo_1d(seed) - 0.3) <= 0.05 for seed in range(10))
    assert hits >= 9


def test_monotone_budget_property():
    """Median best-so-far after 100 evaluations is no worse than after 50
    (minimization frame)."""
    space = ParamSpace([Parameter("x", "real", bounds=(0.0, 1.0))])

    def best_after(seed, n):
        bo = MultiObjectiveBO(
            space, 1, MoboConfig(warmup=10, candidates=256, gp_restarts=2, gp_maxiter=25)
        )
        best = np.inf
        bests = {}
        for it in range(n):
            rng = np.random.default_rng((seed, it))
            cfg = bo.ask(rng)
            f = quadratic_min(cfg["x"])
            bo.tell(cfg, [-f])
            best = min(best, f)
            bests[it + 1] = best
        return bests

    fifty, hundred = [], []
    for seed in range(10):
        bests = best_after(seed, 100)
        fifty.append(bests[50])
        hundred.append(bests[100])
    assert np.median(hundred) <= np.median(fifty)


def test_tell_checks_dimension():
    bo = MultiObjectiveBO(MIXED, 2)
    with pytest.raises(ValueError):
        bo.tell(MIXED.sample(np.random.default_rng(0)), [1.0])


def test_pareto_indices_on_history():
    space = ParamSpace([Parameter("x", "real", bounds=(0.0, 1.0))])
    bo = MultiObjectiveBO(space, 2)
    for x, y in [(0.1, (1.0, 2.0)), (0.2, (2.0, 1.0)), (0.3, (0.5, 0.5))]:
        bo.tell({"x": x}, y)
    assert sorted(bo.pareto_indices()) == [0, 1]
