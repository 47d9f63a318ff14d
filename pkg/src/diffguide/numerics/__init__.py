from .autodiff import (
    NonFiniteError,
    Var,
    add,
    affine,
    backward,
    concat,
    conv2d,
    cross_entropy_with_logits,
    embedding_lookup,
    forward,
    mean_pool,
    mul,
    relu,
    reshape,
    squared_l2,
    sum_,
    vjp,
)
from .fd import finite_diff_grad

__all__ = [
    "NonFiniteError",
    "Var",
    "add",
    "affine",
    "backward",
    "concat",
    "conv2d",
    "cross_entropy_with_logits",
    "embedding_lookup",
    "forward",
    "finite_diff_grad",
    "mean_pool",
    "mul",
    "relu",
    "reshape",
    "squared_l2",
    "sum_",
    "vjp",
]
