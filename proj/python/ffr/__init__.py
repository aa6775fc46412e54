"""Fair representation learning by disentanglement: python surface."""

from ffr._core import (
    __version__,
    delta_dp,
    disentanglement_audit,
    eval_group,
    fair_audit,
    gen_dsprites,
    load_dataset,
    mig,
    mig_from_code,
    parse_group,
    pareto_front,
    predictiveness_audit,
    render_sprite,
    tc_minibatch_estimate,
    train,
)

__all__ = [
    "__version__",
    "delta_dp",
    "disentanglement_audit",
    "eval_group",
    "fair_audit",
    "gen_dsprites",
    "load_dataset",
    "mig",
    "mig_from_code",
    "parse_group",
    "pareto_front",
    "predictiveness_audit",
    "render_sprite",
    "tc_minibatch_estimate",
    "train",
]
