"""Markov chain on words over {1, 2, 3} whose Martin boundary is the Sierpinski gasket.

Modules
-------
words      finite and eventually periodic words, projection to the plane
graph      the level graphs and their cells
kernel     transition probabilities and Monte Carlo
recursion  the hitting-probability sequences and their limits
matrices   transfer matrices and exit distributions
potential  absorption solves, Green function and Martin kernel
boundary   Martin metric and the harmonic functions h_i
render     SVG output
cli        command-line interface
"""
from .kernel import ChainParams, parse_p
from .words import BoundaryWord, parse_any, parse_boundary, parse_word

__all__ = ["BoundaryWord", "ChainParams", "parse_any", "parse_boundary", "parse_p", "parse_word"]
__version__ = "0.1.0"
