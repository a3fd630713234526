"""Dehn functions of finitely presented groups and of the spaces they act on.

Modules:
  words, groups       words, presentations, built-in group models
  filling             exact van Kampen areas and Dehn-function tables
  chains              cellular chains, exact L1 filling norms, winding fillings
  hyperbolic          hyperboloid model and the genus-2 octagon group
  geometry            triangulated patches, PL chains, skeleton loops
  pushing             pushing PL chains into skeletons
  degree              degree fields of pushed 2-chains
  lab                 profiles, the precedes relation, equivalence reports
"""

__version__ = "0.1.0"
