"""Training around non-differentiable black-box linear layers.

The heavy lifting lives in the C++ extension; this package re-exports the
pieces useful from Python: simulated photonic layers, the low-rank surrogate
with its splitting-integrator update, and the zeroth-order estimator.
"""

from ._core import (
    Layer,
    RngStream,
    Surrogate,
    gen_dataset,
    init_oracle,
    init_sketch,
    ipsi_update,
    make_layer,
    mrr_response,
    random_params,
    sm_rel_error,
    transpose_probe,
    zo_estimate,
    zo_estimate_batch,
)

__all__ = [
    "Layer",
    "RngStream",
    "Surrogate",
    "gen_dataset",
    "init_oracle",
    "init_sketch",
    "ipsi_update",
    "make_layer",
    "mrr_response",
    "random_params",
    "sm_rel_error",
    "transpose_probe",
    "zo_estimate",
    "zo_estimate_batch",
]
