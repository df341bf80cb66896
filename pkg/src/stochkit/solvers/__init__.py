"""Stochastic solvers and the name registry used by the harness.

``SOLVERS`` maps a function name to the solver; ``ALGORITHMS`` maps each
algorithm name to ``(solver, option overrides)`` so that, for example,
``"SARAH-Plus"`` runs :func:`sarah` with ``sub_mode='Plus'``.
"""

from .curvature import CurvaturePairs, DenseInverseHessian, bfgs_inverse_update, bfgs_update, powell_damping, two_loop
from .qn import IqnState, iqn, obfgs, slbfgs, subsamp_svrg, subsampled_preconditioner
from .sgd import adagrad, adam, sgd, sgd_cm
from .vr import (GradientTable, bb_sgd, bb_step, sag, saga_estimator, sarah, sarah_recursion, svrg, svrg_bb,
                 svrg_estimator)

SOLVERS = {
    "sgd": sgd,
    "sgd_cm": sgd_cm,
    "adagrad": adagrad,
    "adam": adam,
    "svrg": svrg,
    "sag": sag,
    "sarah": sarah,
    "svrg_bb": svrg_bb,
    "bb_sgd": bb_sgd,
    "obfgs": obfgs,
    "slbfgs": slbfgs,
    "subsamp_svrg": subsamp_svrg,
    "iqn": iqn,
}

ALGORITHMS = {
    "SGD": (sgd, {}),
    "SGD-CM": (sgd_cm, {"sub_mode": "CM"}),
    "SGD-CM-NAG": (sgd_cm, {"sub_mode": "CM-NAG"}),
    "AdaGrad": (adagrad, {"sub_mode": "AdaGrad"}),
    "RMSProp": (adagrad, {"sub_mode": "RMSProp"}),
    "AdaDelta": (adagrad, {"sub_mode": "AdaDelta"}),
    "Adam": (adam, {"sub_mode": "Adam"}),
    "AdaMax": (adam, {"sub_mode": "AdaMax"}),
    "SVRG": (svrg, {}),
    "SAG": (sag, {"sub_mode": "SAG"}),
    "SAGA": (sag, {"sub_mode": "SAGA"}),
    "SARAH": (sarah, {"sub_mode": "plain"}),
    "SARAH-Plus": (sarah, {"sub_mode": "Plus"}),
    "SVRG-BB": (svrg_bb, {}),
    "BB-SGD": (bb_sgd, {}),
    "oBFGS-Inf": (obfgs, {"sub_mode": "Inf-mem"}),
    "oLBFGS-Lim": (obfgs, {"sub_mode": "Lim-mem"}),
    "Reg-oBFGS-Inf": (obfgs, {"sub_mode": "Inf-mem", "delta": 0.1}),
    "Damp-oBFGS-Inf": (obfgs, {"sub_mode": "Inf-mem", "delta": 0.1, "damped": True}),
    "SQN": (slbfgs, {"sub_mode": "SQN"}),
    "SVRG-SQN": (slbfgs, {"sub_mode": "SVRG-SQN"}),
    "SVRG-LBFGS": (slbfgs, {"sub_mode": "SVRG-LBFGS"}),
    "SS-SVRG": (subsamp_svrg, {}),
    "IQN": (iqn, {}),
}


def resolve(name, sub_mode=None):
    """Return ``(solver, overrides)`` for a solver or algorithm name.

    Raises ``KeyError`` listing the valid names.
    """
    if name in ALGORITHMS:
        fn, overrides = ALGORITHMS[name]
        overrides = dict(overrides)
    elif name in SOLVERS:
        fn, overrides = SOLVERS[name], {}
    else:
        valid = ", ".join(list(SOLVERS) + list(ALGORITHMS))
        raise KeyError(f"unknown solver {name!r}; valid: {valid}")
    if sub_mode is not None:
        overrides["sub_mode"] = sub_mode
    return fn, overrides


__all__ = [
    "SOLVERS", "ALGORITHMS", "resolve", "sgd", "sgd_cm", "adagrad", "adam", "svrg", "sag", "sarah", "svrg_bb",
    "bb_sgd", "obfgs", "slbfgs", "subsamp_svrg", "iqn", "svrg_estimator", "sarah_recursion", "saga_estimator",
    "bb_step", "GradientTable", "IqnState", "subsampled_preconditioner", "two_loop", "bfgs_inverse_update",
    "bfgs_update", "powell_damping", "CurvaturePairs", "DenseInverseHessian",
]
