"""Simulation of a single-neutron (spin x path) Peres-Mermin contextuality test."""

from contextuality.errors import (
    ConsistencyError,
    DegenerateBranchError,
    InvalidInputError,
    NotInvolutionError,
)

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError",
    "DegenerateBranchError",
    "InvalidInputError",
    "NotInvolutionError",
]
