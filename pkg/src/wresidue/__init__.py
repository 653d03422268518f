"""Exact Wodzicki residue densities for conformally and vector-field perturbed Dirac operators."""
from .symexpr import Expr, JetVar
from .jets import JetContext, random_context
from .psdo import GradedSymbol, compose, invert, power_symbol_neg

__all__ = ["Expr", "JetVar", "JetContext", "random_context", "GradedSymbol", "compose", "invert",
           "power_symbol_neg"]
__version__ = "0.1.0"
