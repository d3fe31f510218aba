"""Model(s) for class probabilities and class-to-class connection probabilities."""

from dataclasses import dataclass, field
from math import factorial
from pathlib import Path

import numpy as np

from votesurprise.errors import DimensionMismatch, InvalidInput
from votesurprise.util import load_json

from .preference import ClassSystem

SUM_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-12


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.float64)
    values.flags.writeable = False
    return values


@dataclass(frozen=True)
class ClassDistribution:
    """Probability eps[j] that a voter falls in class j."""

    eps: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        """Validate the distribution."""
        eps = _frozen(self.eps)
        object.__setattr__(self, "eps", eps)
        if eps.ndim != 1 or eps.size < 2:
            raise InvalidInput(f"eps must be a vector of at least 2 entries, got {eps.shape}")
        for j, value in enumerate(eps):
            if not 0.0 <= value <= 1.0:
                raise InvalidInput(f"eps[{j}]={value} must be in [0, 1]")
        total = float(eps.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise InvalidInput(f"eps sums to {total:.12g}, expected 1")

    @property
    def size(self) -> int:
        """Return the number of classes."""
        return int(self.eps.size)

    @classmethod
    def uniform(cls, size: int) -> "ClassDistribution":
        """Return the uniform distribution over `size` classes."""
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def two_candidate(cls, epsilon: float) -> "ClassDistribution":
        """Return (1/2 + epsilon, 1/2 - epsilon) for the two classes a1>a2, a2>a1."""
        if not 0.0 <= epsilon <= 0.5:
            raise InvalidInput(f"epsilon={epsilon} must be in [0, 1/2]")
        return cls(np.array([0.5 + epsilon, 0.5 - epsilon]))


@dataclass(frozen=True)
class ConnectionMatrix:
    """
    Symmetric |C| x |C| matrix of connection probabilities.

    Holds both the true matrix P and a voter-side estimate P-hat. Zero entries
    are rejected: estimates divide by them.
    """

    p: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        """Validate symmetry and the (0, 1] range."""
        p = _frozen(self.p)
        object.__setattr__(self, "p", p)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise InvalidInput(f"connection matrix must be square, got {p.shape}")
        for (j, k), value in np.ndenumerate(p):
            if not 0.0 < value <= 1.0:
                raise InvalidInput(f"p[{j}][{k}]={value} must be in (0, 1]")
        asym = np.argwhere(np.abs(p - p.T) > SYMMETRY_TOLERANCE)
        if asym.size:
            j, k = asym[0]
            raise InvalidInput(f"p[{j}][{k}]={p[j, k]} differs from p[{k}][{j}]={p[k, j]}")

    @property
    def size(self) -> int:
        """Return the number of classes."""
        return int(self.p.shape[0])

    def __getitem__(self, index: tuple[int, int]) -> float:
        """Return entry (j, k)."""
        return float(self.p[index])

    @classmethod
    def uniform(cls, size: int, value: float) -> "ConnectionMatrix":
        """Return a matrix with every entry equal to value."""
        return cls(np.full((size, size), value))

    @classmethod
    def two_level(cls, size: int, same: float, cross: float) -> "ConnectionMatrix":
        """Return `same` on the diagonal and `cross` elsewhere."""
        p = np.full((size, size), cross)
        np.fill_diagonal(p, same)
        return cls(p)

    @classmethod
    def from_kt(cls, cs: ClassSystem, near: float, decay: float = 0.5) -> "ConnectionMatrix":
        """Return the regular matrix p[j][k] = near * decay ** kt[j][k]."""
        if not 0.0 < decay <= 1.0:
            raise InvalidInput(f"decay={decay} must be in (0, 1]")
        return cls(near * np.power(decay, cs.kt.astype(np.float64)))


def _check_dims(cs: ClassSystem, *matrices: ConnectionMatrix) -> None:
    for matrix in matrices:
        if matrix.size != cs.size:
            raise DimensionMismatch(
                f"connection matrix has {matrix.size} classes, expected {cs.size}"
            )


def _monotone_in_kt(values: np.ndarray, cs: ClassSystem, strict: bool) -> bool:
    """Check kt[j][k] < kt[j][l] => values[j][k] >= values[j][l] on every row."""
    kt = cs.kt
    for j in range(cs.size):
        closer = kt[j][:, None] < kt[j][None, :]
        if strict:
            ok = values[j][:, None] > values[j][None, :]
        else:
            ok = values[j][:, None] >= values[j][None, :]
        if np.any(closer & ~ok):
            return False
    return True


def is_regular(p: ConnectionMatrix, cs: ClassSystem, strict: bool = False) -> bool:
    """Return True when every row is monotone decreasing in KT distance."""
    _check_dims(cs, p)
    return _monotone_in_kt(p.p, cs, strict)


def satisfies_mee(
    p: ConnectionMatrix, phat: ConnectionMatrix, cs: ClassSystem, strict: bool = False
) -> bool:
    """Return True when p/phat decreases with KT distance (monotone estimation error)."""
    _check_dims(cs, p, phat)
    return _monotone_in_kt(p.p / phat.p, cs, strict)


@dataclass(frozen=True)
class ModelFile:
    """Content of a model json file: {"m", "eps", "p", "phat"?}."""

    m: int
    eps: ClassDistribution
    p: ConnectionMatrix
    phat: ConnectionMatrix | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelFile":
        """Parse and validate, naming the offending entry on failure."""
        extra = raw.keys() - {"m", "eps", "p", "phat"}
        if extra:
            raise InvalidInput(f"unknown model key(s): {', '.join(sorted(extra))}")
        for key in ("m", "eps", "p"):
            if key not in raw:
                raise InvalidInput(f"model file misses `{key}`")
        m = raw["m"]
        if not isinstance(m, int) or isinstance(m, bool):
            raise InvalidInput(f"m={m!r} must be an integer")
        classes = factorial(m) if 2 <= m <= 6 else -1
        eps = ClassDistribution(np.asarray(raw["eps"], dtype=np.float64))
        p = ConnectionMatrix(np.asarray(raw["p"], dtype=np.float64))
        phat = None
        if raw.get("phat") is not None:
            phat = ConnectionMatrix(np.asarray(raw["phat"], dtype=np.float64))
        for name, size in (("eps", eps.size), ("p", p.size), ("phat", phat.size if phat else classes)):
            if size != classes:
                raise DimensionMismatch(f"{name} has {size} classes, m={m} needs {classes}")
        return cls(m=m, eps=eps, p=p, phat=phat)


def load_model_file(path: Path) -> ModelFile:
    """Load a model json file."""
    return ModelFile.from_dict(load_json(path))
