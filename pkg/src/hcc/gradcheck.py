from typing import Callable, List, Sequence

import numpy as np

from hcc.errors import DeterminismError
from hcc.schemas.reports import GradientCheckEntry, GradientCheckReport
from hcc.tensor import Parameter


LossFn = Callable[[bool], float]


def check_gradients(
        loss_fn: LossFn,
        params: Sequence[Parameter],
        eps: float = 1e-4,
        tol: float = 1e-4,
        floor: float = 1e-3,
) -> GradientCheckReport:
    """
    Compare analytic gradients against central differences.

    ``loss_fn(True)`` must return the scalar loss and accumulate analytic
    gradients into ``param.grad``; ``loss_fn(False)`` returns the loss only.
    Relative error is ``|a - n| / max(|a|, |n|, floor)``.
    """
    for p in params:
        p.zero_grad()

    baseline = loss_fn(True)
    if loss_fn(False) != baseline:
        raise DeterminismError("loss function returned different values at the same parameters")

    analytic = {p.name: p.grad.copy() for p in params}
    for p in params:
        p.zero_grad()

    entries: List[GradientCheckEntry] = []
    for p in params:
        numeric = np.zeros_like(p.value)
        flat_value = p.value.reshape(-1)
        flat_numeric = numeric.reshape(-1)

        for i in range(flat_value.size):
            original = flat_value[i]
            flat_value[i] = original + eps
            plus = loss_fn(False)
            flat_value[i] = original - eps
            minus = loss_fn(False)
            flat_value[i] = original
            flat_numeric[i] = (plus - minus) / (2 * eps)

        a = analytic[p.name]
        scale = np.maximum(np.maximum(np.abs(a), np.abs(numeric)), floor)
        rel = np.abs(a - numeric) / scale
        entries.append(GradientCheckEntry(
            name=p.name,
            max_relative_error=float(rel.max()) if rel.size else 0.0,
            flagged=int(np.count_nonzero(rel > tol)),
            size=int(rel.size),
        ))

    return GradientCheckReport(eps=eps, tol=tol, entries=entries)
