"""Band-limited periodic functions on the unit torus.

A :class:`FourierData` stores finitely many Fourier modes

    g(x) = sum_m c_m exp(2 pi i m . x),    m in Z^d,

so every evaluation is an exact finite sum.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ValidationError

__all__ = [
    "FourierData",
    "builtin",
    "BUILTINS",
    "multi_indices",
    "multiindex_lower_bound",
    "multiindex_constant",
]


@dataclass(frozen=True, eq=False)
class FourierData:
    """Finite Fourier series on the d-torus.

    ``modes`` is an (K, d) integer array, ``values`` the matching complex
    coefficients.  Duplicate modes are summed on construction and zero
    coefficients dropped.
    """

    modes: np.ndarray
    values: np.ndarray
    name: str = field(default="custom")

    def __post_init__(self):
        modes = np.atleast_2d(np.asarray(self.modes, dtype=np.int64))
        values = np.atleast_1d(np.asarray(self.values, dtype=np.complex128))
        if modes.shape[0] != values.shape[0]:
            raise ValidationError("modes and values must have equal length")
        if modes.shape[1] < 1:
            raise ValidationError("dimension must be at least 1")
        if not np.all(np.isfinite(values)):
            raise ValidationError("coefficients must be finite")
        merged: dict[tuple[int, ...], complex] = {}
        for m, c in zip(map(tuple, modes.tolist()), values.tolist()):
            merged[m] = merged.get(m, 0.0) + c
        keys = sorted(k for k, v in merged.items() if v != 0)
        dim = modes.shape[1]
        m_arr = np.array(keys, dtype=np.int64).reshape(len(keys), dim)
        v_arr = np.array([merged[k] for k in keys], dtype=np.complex128)
        m_arr.setflags(write=False)
        v_arr.setflags(write=False)
        object.__setattr__(self, "modes", m_arr)
        object.__setattr__(self, "values", v_arr)

    @classmethod
    def from_dict(cls, coeffs: dict, dim: int | None = None, name: str = "custom"):
        """Build from ``{m: c_m}`` with ``m`` a tuple of ints."""
        if not coeffs:
            if dim is None:
                raise ValidationError("empty coefficient map needs an explicit dim")
            return cls(np.zeros((0, dim), dtype=np.int64), np.zeros(0), name=name)
        keys = [tuple(int(v) for v in np.atleast_1d(k)) for k in coeffs]
        dims = {len(k) for k in keys}
        if len(dims) != 1 or (dim is not None and dims != {dim}):
            raise ValidationError("inconsistent frequency vector lengths")
        return cls(np.array(keys), np.array(list(coeffs.values())), name=name)

    @property
    def dim(self) -> int:
        return self.modes.shape[1]

    @property
    def coeffs(self) -> dict[tuple[int, ...], complex]:
        return {tuple(m): complex(c) for m, c in zip(self.modes.tolist(), self.values)}

    @property
    def max_freq(self) -> int:
        """Largest sup-norm of a mode with nonzero coefficient (0 if none)."""
        if self.modes.shape[0] == 0:
            return 0
        return int(np.abs(self.modes).max())

    def coefficient(self, m) -> complex:
        m = tuple(int(v) for v in m)
        hit = np.all(self.modes == np.array(m), axis=1)
        return complex(self.values[hit][0]) if hit.any() else 0j

    def is_real(self, tol: float = 1e-14) -> bool:
        """True when c_{-m} = conj(c_m) for every stored mode."""
        table = self.coeffs
        scale = max(1.0, float(np.abs(self.values).max(initial=0.0)))
        for m, c in table.items():
            partner = table.get(tuple(-v for v in m), 0j)
            if abs(partner - np.conj(c)) > tol * scale:
                return False
        return True

    def check_real(self) -> None:
        if not self.is_real():
            raise ValidationError("coefficients are not conjugate symmetric")

    def evaluate(self, x) -> np.ndarray | complex:
        """Sum of the series at ``x`` (shape ``(d,)`` or ``(..., d)``)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValidationError(
                f"point dimension {x.shape[-1:]} does not match dim={self.dim}"
            )
        if not np.all(np.isfinite(x)):
            raise ValidationError("evaluation point must be finite")
        pts = x.reshape(-1, self.dim)
        out = np.zeros(pts.shape[0], dtype=np.complex128)
        if self.modes.shape[0]:
            # reduce each coordinate mod 1 first: m is integral so this is exact
            # periodicity and keeps the phase argument small
            frac = pts - np.floor(pts)
            chunk = max(1, 2_000_000 // max(1, self.modes.shape[0]))
            mt = self.modes.T.astype(float)
            for lo in range(0, pts.shape[0], chunk):
                phase = frac[lo:lo + chunk] @ mt
                phase -= np.floor(phase)
                out[lo:lo + chunk] = np.exp(2j * np.pi * phase) @ self.values
        if x.ndim == 1:
            return complex(out[0])
        return out.reshape(x.shape[:-1])

    def evaluate_scaled(self, x, eps: float):
        """Evaluate g(x / eps)."""
        if not eps > 0:
            raise ValidationError("eps must be positive")
        return self.evaluate(np.asarray(x, dtype=float) / eps)

    def mean(self) -> complex:
        """Torus mean, i.e. the zero mode."""
        return self.coefficient((0,) * self.dim)

    def shifted(self, const: complex) -> "FourierData":
        """g + const."""
        modes = np.vstack([self.modes, np.zeros((1, self.dim), dtype=np.int64)])
        values = np.concatenate([self.values, [const]])
        return FourierData(modes, values, name=f"{self.name}+{const}")

    def dilated(self, factor: int) -> "FourierData":
        """g(factor * x), obtained by reindexing m -> factor * m."""
        if int(factor) != factor or factor < 1:
            raise ValidationError("dilation factor must be a positive integer")
        return FourierData(self.modes * int(factor), self.values, name=f"{self.name}*{factor}")

    def decay_sum(self, beta: float, cutoff: int) -> float:
        """Sum of |c_m| / ||m||^beta over 0 < ||m||_inf <= cutoff (Euclidean ||m||)."""
        if cutoff < 1:
            raise ValidationError("cutoff must be >= 1")
        sup = np.abs(self.modes).max(axis=1) if self.modes.size else np.zeros(0)
        keep = (sup > 0) & (sup <= cutoff)
        norms = np.sqrt((self.modes[keep].astype(float) ** 2).sum(axis=1))
        return float(np.sum(np.abs(self.values[keep]) / norms**beta))

    def sobolev_rhs(self, k: int) -> float:
        """(sum_m sum_{|alpha|=k} |(2 pi m)^alpha|^2 |c_m|^2)^(1/2), the Parseval form
        of (sum_{|alpha|=k} ||D^alpha g||_2^2)^(1/2)."""
        if k < 0:
            raise ValidationError("k must be >= 0")
        two_pi_m = 2 * np.pi * self.modes.astype(float)
        total = np.zeros(self.modes.shape[0])
        for alpha in multi_indices(self.dim, k):
            total += np.prod(two_pi_m ** np.array(alpha), axis=1) ** 2
        return float(np.sqrt(np.sum(total * np.abs(self.values) ** 2)))

    # -- serialization -------------------------------------------------------

    def to_records(self) -> list[dict]:
        return [
            {"m": [int(v) for v in m], "re": float(c.real), "im": float(c.imag)}
            for m, c in zip(self.modes.tolist(), self.values)
        ]

    @classmethod
    def from_records(cls, records, name: str = "custom") -> "FourierData":
        if not isinstance(records, list) or not records:
            raise ValidationError("coefficient file must hold a non-empty list of records")
        try:
            modes = [[int(v) for v in r["m"]] for r in records]
            values = [complex(float(r.get("re", 0.0)), float(r.get("im", 0.0))) for r in records]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed coefficient record: {exc}") from None
        if len({len(m) for m in modes}) != 1:
            raise ValidationError("inconsistent frequency vector lengths")
        return cls(np.array(modes), np.array(values), name=name)

    @classmethod
    def from_json(cls, path) -> "FourierData":
        path = Path(path)
        try:
            records = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read coefficient file {path}: {exc}") from None
        return cls.from_records(records, name=path.stem)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_records(), indent=1))


def _cos1() -> FourierData:
    return FourierData([[1, 0], [-1, 0]], [0.5, 0.5], name="cos1")


def _cos_cos() -> FourierData:
    # cos(2 pi x1) cos(2 pi x2) = (1/4) sum over the four diagonal modes
    return FourierData([[1, 1], [1, -1], [-1, 1], [-1, -1]], [0.25] * 4, name="cos-cos")


def _decay_p(dim: int = 2, cutoff: int = 64) -> FourierData:
    """|c_m| = ||m||^-(d+1) for 0 < ||m||_inf <= cutoff; real, even."""
    rng = np.arange(-cutoff, cutoff + 1)
    grid = np.stack(np.meshgrid(*([rng] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    grid = grid[np.any(grid != 0, axis=1)]
    norms = np.sqrt((grid.astype(float) ** 2).sum(axis=1))
    return FourierData(grid, norms ** -(dim + 1.0), name="decay-p")


BUILTINS = {"cos1": _cos1, "cos-cos": _cos_cos, "decay-p": _decay_p}


def builtin(name: str) -> FourierData:
    """Named boundary data; accepts ``cos1`` or ``builtin:cos1``."""
    key = name.split(":", 1)[1] if name.startswith("builtin:") else name
    try:
        return BUILTINS[key]()
    except KeyError:
        raise ValidationError(
            f"unknown builtin g '{key}' (choose from {', '.join(BUILTINS)})"
        ) from None


def multi_indices(dim: int, k: int):
    """All alpha in Z_+^dim with |alpha| = k, in lexicographic order."""
    if dim == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in multi_indices(dim - 1, k - first):
            yield (first,) + rest


def multiindex_lower_bound(m, k: int) -> tuple[float, float]:
    """Return ``(S, S / ||m||^k)`` with ``S = sum_{|alpha|=k} |m^alpha|``.

    The ratio is computed from the exact rational S^2 / ||m||^(2k), so it is
    bitwise invariant under m -> t*m.
    """
    m = [int(v) for v in np.atleast_1d(m)]
    if k < 1:
        raise ValidationError("k must be >= 1")
    if all(v == 0 for v in m):
        raise ValidationError("m must be nonzero")
    absm = [abs(v) for v in m]
    total = 0
    for alpha in multi_indices(len(m), k):
        term = 1
        for base, power in zip(absm, alpha):
            term *= base**power
        total += term
    norm2 = sum(v * v for v in m)
    ratio = float(np.sqrt(float(Fraction(total * total, norm2**k))))
    return float(total), ratio


def multiindex_constant(dim: int, k: int, n: int = 4096) -> float:
    """Grid estimate of min over the unit sphere of sum_{|alpha|=k} |x^alpha|."""
    if dim == 1:
        return 1.0
    if dim == 2:
        th = np.linspace(0.0, np.pi / 2, n + 1)
        pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    elif dim == 3:
        side = int(np.sqrt(n)) + 1
        th, ph = np.meshgrid(np.linspace(0, np.pi / 2, side), np.linspace(0, np.pi / 2, side))
        pts = np.stack(
            [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1
        ).reshape(-1, 3)
    else:
        raise ValidationError("multiindex_constant supports dim <= 3")
    vals = np.zeros(pts.shape[0])
    for alpha in multi_indices(dim, k):
        vals += np.prod(np.abs(pts) ** np.array(alpha), axis=1)
    return float(vals.min())


def all_modes(dim: int, cutoff: int):
    """Every nonzero m with ||m||_inf <= cutoff."""
    for m in itertools.product(range(-cutoff, cutoff + 1), repeat=dim):
        if any(m):
            yield m
