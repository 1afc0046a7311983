"""Certified exponential growth rates of finitely generated groups and semigroups.

Modules: ``words`` (free and small-cancellation words), ``subgroup``
(Stallings folding, Whitehead canonical forms), ``census`` (exact ball
enumeration), ``cones`` (validated shortlex automata), ``perron`` (certified
spectral radius), ``treelab`` (separators and feasible words on a free tree)
and ``ratescan`` (scans, records and reports).
"""

from .census import BallCensus, enumerate_ball
from .cones import ConeAutomaton, build_cone_automaton, transfer_counts
from .perron import RateEnclosure, perron_enclosure
from .words import FreeGroup, GenTuple, format_word, free_reduce, group_from_label, parse_word, surface_group

__version__ = "0.1.0"
