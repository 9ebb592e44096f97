"""Online activity detection from per-clip foreground masks.

Masks are numpy arrays shaped (frames, height, width) with values in [0, 1].
Tubes, instances and ground truth travel as plain dicts in the same layout
as the JSON Lines files the command line tool writes. Functions taking a
``config`` string accept the ``key = value`` config file format.
"""

from ._actdet import (
    FormatError,
    bce_loss,
    dice_loss,
    extract,
    label_components,
    merge_tubelets,
    patch_dice_loss,
    pdl_gradient,
    read_gbm,
    run,
    score,
    split_tubes,
    synth,
    write_gbm,
)

__all__ = [
    "FormatError",
    "bce_loss",
    "dice_loss",
    "extract",
    "label_components",
    "merge_tubelets",
    "patch_dice_loss",
    "pdl_gradient",
    "read_gbm",
    "run",
    "score",
    "split_tubes",
    "synth",
    "write_gbm",
]
