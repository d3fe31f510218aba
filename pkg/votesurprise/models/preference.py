"""
Model(s) for candidates, preference orders and preference classes.

Classes are enumerated lexicographically on their rankings. For three
candidates (a1, a2, a3 = 0, 1, 2) this enumeration coincides with the
labels of the classical table of preference classes:

    index  ranking         label
    0      a1 > a2 > a3    P1
    1      a1 > a3 > a2    P2
    2      a2 > a1 > a3    P3
    3      a2 > a3 > a1    P4
    4      a3 > a1 > a2    P5
    5      a3 > a2 > a1    P6
"""

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, permutations

import numpy as np

from votesurprise.errors import DimensionMismatch, InvalidInput

MIN_CANDIDATES = 2
MAX_CANDIDATES = 6

# lexicographic index -> label in the table of preference classes for m=3
TABLE1_LABELS: dict[tuple[int, ...], str] = {
    (0, 1, 2): "P1",
    (0, 2, 1): "P2",
    (1, 0, 2): "P3",
    (1, 2, 0): "P4",
    (2, 0, 1): "P5",
    (2, 1, 0): "P6",
}


def candidate_label(candidate: int) -> str:
    """Return the conventional label (a1, a2, ...) of a candidate index."""
    return f"a{candidate + 1}"


@dataclass(frozen=True)
class PreferenceOrder:
    """A total order over candidates, best first."""

    ranking: tuple[int, ...]

    def __post_init__(self) -> None:
        """Validate that ranking is a permutation of 0..m-1."""
        ranking = tuple(int(c) for c in self.ranking)
        object.__setattr__(self, "ranking", ranking)
        if len(ranking) < MIN_CANDIDATES:
            raise InvalidInput(f"ranking {ranking} needs at least 2 candidates")
        if sorted(ranking) != list(range(len(ranking))):
            raise InvalidInput(f"ranking {ranking} is not a permutation of 0..m-1")

    @property
    def m(self) -> int:
        """Return the number of candidates."""
        return len(self.ranking)

    @property
    def favorite(self) -> int:
        """Return the top ranked candidate."""
        return self.ranking[0]

    def position(self, candidate: int) -> int:
        """Return the 0-based position of a candidate in this order."""
        return self.ranking.index(candidate)

    def __str__(self) -> str:
        """Return a readable `a1>a2>a3` form."""
        return ">".join(candidate_label(c) for c in self.ranking)


def kt_distance(a: PreferenceOrder, b: PreferenceOrder) -> int:
    """Return the Kendall-tau distance: pairs of candidates ordered oppositely."""
    if a.m != b.m:
        raise InvalidInput(f"orders over different candidate counts: {a.m} and {b.m}")
    pos_b = [0] * b.m
    for position, candidate in enumerate(b.ranking):
        pos_b[candidate] = position
    # b's positions read in a's order, inversions counted pairwise
    seq = [pos_b[c] for c in a.ranking]
    return sum(1 for i, j in combinations(range(len(seq)), 2) if seq[i] > seq[j])


@dataclass(frozen=True)
class ClassSystem:
    """All m! preference classes over m candidates plus their KT distances."""

    m: int
    classes: tuple[PreferenceOrder, ...]
    kt: np.ndarray = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        """Return the number of classes (m!)."""
        return len(self.classes)

    @cached_property
    def positions(self) -> np.ndarray:
        """Return a |C| x m matrix: position of each candidate in each class."""
        pos = np.empty((self.size, self.m), dtype=np.int64)
        for k, order in enumerate(self.classes):
            for position, candidate in enumerate(order.ranking):
                pos[k, candidate] = position
        pos.flags.writeable = False
        return pos

    @cached_property
    def favorites(self) -> np.ndarray:
        """Return the favorite candidate of every class."""
        fav = np.array([order.favorite for order in self.classes], dtype=np.int64)
        fav.flags.writeable = False
        return fav

    def index_of(self, order: PreferenceOrder | tuple[int, ...]) -> int:
        """Return the class index of an order."""
        if not isinstance(order, PreferenceOrder):
            order = PreferenceOrder(tuple(order))
        try:
            return self.classes.index(order)
        except ValueError as exc:
            raise InvalidInput(f"{order} is not a class over {self.m} candidates") from exc

    def table1_label(self, index: int) -> str:
        """Return the P1..P6 label of a class (three candidates only)."""
        if self.m != 3:
            raise InvalidInput("table labels exist for three candidates only")
        return TABLE1_LABELS[self.classes[index].ranking]

    def score_matrix(self, scores: np.ndarray | tuple[float, ...]) -> np.ndarray:
        """Return a |C| x m matrix: score each class gives each candidate."""
        vector = np.asarray(scores, dtype=np.float64)
        if vector.shape != (self.m,):
            raise DimensionMismatch(
                f"score vector of length {vector.shape} for {self.m} candidates"
            )
        return vector[self.positions]

    def check_size(self, size: int, what: str) -> None:
        """Raise DimensionMismatch when `size` is not the number of classes."""
        if size != self.size:
            raise DimensionMismatch(f"{what} has {size} classes, expected {self.size}")


def build_class_system(m: int) -> ClassSystem:
    """Enumerate all m! classes lexicographically and fill the KT matrix."""
    if not MIN_CANDIDATES <= m <= MAX_CANDIDATES:
        raise InvalidInput(f"m={m} must be between {MIN_CANDIDATES} and {MAX_CANDIDATES}")
    classes = tuple(PreferenceOrder(r) for r in permutations(range(m)))
    pos = np.array([[order.position(c) for c in range(m)] for order in classes])
    kt = np.zeros((len(classes), len(classes)), dtype=np.int64)
    # one pass per candidate pair: count the classes that disagree on it
    for c1, c2 in combinations(range(m), 2):
        ahead = pos[:, c1] < pos[:, c2]
        kt += ahead[:, None] != ahead[None, :]
    kt.flags.writeable = False
    return ClassSystem(m=m, classes=classes, kt=kt)
