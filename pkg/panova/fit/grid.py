"""
Model grids for binomial studies: links × variable sets
File location: ./panova/fit/grid.py
"""

# imports
from itertools import combinations
from typing import List, NamedTuple, Optional, Sequence, Tuple

from panova.errors import InvalidInputError
from panova.types import Link

VariableSet = Tuple[int, ...]


class GridModelSpec(NamedTuple):
    """One cell of the grid; index is the 0-based m_i position"""

    index: int
    link: Link
    variables: VariableSet

    def label(self, names: Sequence[str]) -> str:
        inner = ",".join(names[j] for j in self.variables) if self.variables else "no effect"
        return f"m{self.index + 1}: {self.link.value}({inner})"


def variable_sets(p: int, max_size: Optional[int] = None, include_empty: bool = True) -> List[VariableSet]:
    """
    Nonempty subsets of range(p) by size, then lexicographically; the empty
    ("no effect") set last. For p = 3 this is t, t², s, (t,t²), (t,s), (t²,s),
    (t,t²,s), no effect.
    """
    if p < 0:
        raise InvalidInputError("p must be >= 0")
    top = p if max_size is None else min(max_size, p)
    sets: List[VariableSet] = []
    for size in range(1, top + 1):
        sets.extend(combinations(range(p), size))
    if include_empty:
        sets.append(())
    return sets


def model_grid(links: Sequence[Link], sets: Sequence[VariableSet]) -> List[GridModelSpec]:
    """Cartesian product with links outer, in row-major order"""
    if not links or not sets:
        raise InvalidInputError("model grid needs at least one link and one variable set")
    specs = []
    for link in links:
        for variables in sets:
            specs.append(GridModelSpec(len(specs), Link(link), tuple(variables)))
    return specs
