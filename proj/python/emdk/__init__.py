"""Earth mover's distance kernels."""

import json

from ._emdk import (
    DimensionMismatch,
    DomainError,
    InputError,
    OneVsAll,
    PointSet,
    biotope,
    diagnose,
    emd,
    emd_1d,
    emd_circle,
    emdhat,
    emi,
    intersect,
    jaccard,
    normalize,
    pd_ization_order,
    rbf,
    synthetic,
    tanimoto,
    train_one_vs_all,
    unite,
)
from ._emdk import pairwise as _pairwise


def pairwise(sets, pipeline=None, threads=0):
    """Pairwise matrix of the variant named in `pipeline` (a dict of pipeline keys)."""
    return _pairwise(list(sets), json.dumps(pipeline or {}), threads)


__all__ = [
    "DimensionMismatch", "DomainError", "InputError", "OneVsAll", "PointSet", "biotope", "diagnose",
    "emd", "emd_1d", "emd_circle", "emdhat", "emi", "intersect", "jaccard", "normalize", "pairwise",
    "pd_ization_order", "rbf", "synthetic", "tanimoto", "train_one_vs_all", "unite",
]
