"""skillbo: symbolic task planning plus multi-objective Bayesian optimization
of skill parameters, evaluated in a built-in impedance-control simulator."""

__version__ = "0.1.0"
