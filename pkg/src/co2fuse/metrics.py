"""Evaluation metrics: MSE, RMSE and adjusted R2.

    MSE    = (1/n) * sum_i (y_i - yhat_i)^2
    RMSE   = sqrt(MSE)
    adjR2  = 1 - ((n - 1) / (n - p - 1)) * SSE / SST

with SST taken around the mean of the true values and p the number of model
input features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InsufficientSamplesError, UndefinedR2Error


@dataclass(frozen=True)
class EvalReport:
    n: int
    p_features: int
    mse: float
    rmse: float
    adj_r2: float

    def csv_row(self, model: str) -> str:
        return f"{model},{self.n},{self.p_features},{self.mse!r},{self.rmse!r},{self.adj_r2!r}"


EVAL_CSV_HEADER = "model,n,p,mse,rmse,adj_r2"


def evaluate(y: Sequence[float], yhat: Sequence[float], p_features: int) -> EvalReport:
    """Score predictions against truth.

    Requires equal non-zero lengths, non-constant y, and n > p_features + 1
    so the adjusted R2 denominator stays positive.
    """
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1:
        raise ValueError(f"length mismatch: y has shape {y.shape}, yhat {yhat.shape}")
    n = y.shape[0]
    if n == 0:
        raise ValueError("cannot evaluate zero samples")
    if p_features < 0:
        raise ValueError("p_features must be non-negative")
    if n <= p_features + 1:
        raise InsufficientSamplesError(
            f"adjusted R2 needs n > p + 1 (got n={n}, p={p_features})"
        )
    sse = float(np.sum((y - yhat) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise UndefinedR2Error("true values are constant; R2 is undefined")
    mse = sse / n
    adj_r2 = 1.0 - ((n - 1) / (n - p_features - 1)) * (sse / sst)
    return EvalReport(n=n, p_features=p_features, mse=mse, rmse=math.sqrt(mse), adj_r2=adj_r2)
