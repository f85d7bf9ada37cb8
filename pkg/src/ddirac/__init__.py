"""Forward and inverse spectral problems for Dirac systems with two constant delays."""
from .charfn import CharFnEvaluator, Spectrum, eval_delta, find_all_eigenvalues, find_eigenvalues
from .gridfn import GridFn, GridSum
from .kernels import KernelSet, assemble_kernels
from .potentials import DelayPair, PotentialSet, Region, classify, preset

__all__ = ["CharFnEvaluator", "Spectrum", "eval_delta", "find_all_eigenvalues",
           "find_eigenvalues", "GridFn", "GridSum", "KernelSet", "assemble_kernels",
           "DelayPair", "PotentialSet", "Region", "classify", "preset"]
