from .domain import DomainBox, Sample, Objective, evaluate, snap_to_grid, quantize_wrap, sample_uniform, latin_hypercube
from .benchmarks import ackley, michalewicz, make_benchmark, unique_cells, BENCHMARKS
from .gp import (
    KernelParams,
    GpModel,
    fit_gp,
    predict,
    predict_batch,
    log_marginal_likelihood,
    expected_improvement,
    thompson_select,
    correlation_lengths,
    correlation_scalar,
)
from .descent import DescentOutcome, step_size, propose_direction, stp_basic_step, stp_oracle_step, stp_fine_step, descend
from .local_bo import TrustRegion, LocalBoOutcome, init_tr, update_tr, bo_step, local_bo_run
from .tree import TreeNode, uct_child, uct_explore, leaf_expand_pred, MonteCarloTreeDescent, mctd_run

__all__ = [
    "DomainBox",
    "Sample",
    "Objective",
    "evaluate",
    "snap_to_grid",
    "quantize_wrap",
    "sample_uniform",
    "latin_hypercube",
    "ackley",
    "michalewicz",
    "make_benchmark",
    "unique_cells",
    "BENCHMARKS",
    "KernelParams",
    "GpModel",
    "fit_gp",
    "predict",
    "predict_batch",
    "log_marginal_likelihood",
    "expected_improvement",
    "thompson_select",
    "correlation_lengths",
    "correlation_scalar",
    "DescentOutcome",
    "step_size",
    "propose_direction",
    "stp_basic_step",
    "stp_oracle_step",
    "stp_fine_step",
    "descend",
    "TrustRegion",
    "LocalBoOutcome",
    "init_tr",
    "update_tr",
    "bo_step",
    "local_bo_run",
    "TreeNode",
    "uct_child",
    "uct_explore",
    "leaf_expand_pred",
    "MonteCarloTreeDescent",
    "mctd_run",
]
