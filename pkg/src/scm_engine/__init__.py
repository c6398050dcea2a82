"""
Structural causal model engine
"""

from .models import Intervention, NoiseSpec, Scm, ScmError, ScmGenConfig, StructuralEq
from .engine import (
    closed_form_covariance,
    generate_linear_scm,
    induced_dag,
    sample,
    sample_batch,
    toy_pair,
)
from .io import read_scms, scm_from_record, scm_to_record, write_scms

__all__ = [
    "Intervention",
    "NoiseSpec",
    "Scm",
    "ScmError",
    "ScmGenConfig",
    "StructuralEq",
    "closed_form_covariance",
    "generate_linear_scm",
    "induced_dag",
    "read_scms",
    "sample",
    "sample_batch",
    "scm_from_record",
    "scm_to_record",
    "toy_pair",
    "write_scms",
]
