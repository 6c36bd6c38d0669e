from .distributed import merge_summaries, parallel_compress, round_robin
from .greedy import GreedyContext, greedy_compress, resolve_target
from .objective import ObjectiveState, kl_diagnostic, marginal_gain, objective

__all__ = [
    "GreedyContext",
    "ObjectiveState",
    "greedy_compress",
    "kl_diagnostic",
    "marginal_gain",
    "merge_summaries",
    "objective",
    "parallel_compress",
    "resolve_target",
    "round_robin",
]
