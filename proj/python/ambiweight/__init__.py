"""Ambiguity-aware multi-label training toolkit (python bindings)."""

try:
    from ._ambiweight import *  # noqa: F401,F403  (installed layout)
    from ._ambiweight import __doc__ as _core_doc
except ImportError:  # in-build layout: extension next to the package on sys.path
    from _ambiweight import *  # noqa: F401,F403
    from _ambiweight import __doc__ as _core_doc

__all__ = [
    "pair_state",
    "encode_targets",
    "ClassWeights",
    "class_weights",
    "draw_modifier",
    "effective_weights",
    "multilabel_loss",
    "label_report",
    "tokenize",
    "roc_auc",
    "Dataset",
    "generate",
    "load_manifest",
    "train_and_evaluate",
]
