"""Finite relational structures, lifted constraint languages and their algebraic reductions."""

from .errors import (CapacityError, CostOverflowError, CspLiftError, ParseError, PreconditionError, StructuralError,
                     TheoremViolation, UnsupportedError)
from .structures import Homomorphism, LazyRelation, Relation, RelationalStructure
from .solver import find_homomorphism, hom_equivalent, is_homomorphism, up_membership, upper_than

__version__ = "0.1.0"
