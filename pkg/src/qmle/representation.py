"""Sample tuples, which double as representations of the Kronecker quiver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .thresholds import Field


@dataclass(frozen=True, eq=False)
class RepTuple:
    """An m-tuple of ``p x q`` matrices stored as an array of shape ``(m, p, q)``."""

    matrices: np.ndarray
    field: Field = Field.REAL

    def __post_init__(self):
        field = Field(self.field)
        arr = np.asarray(self.matrices)
        if arr.ndim != 3:
            raise ValueError(f"expected an array of shape (m, p, q), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ValueError(f"m, p and q must be positive, got {arr.shape}")
        if field is Field.REAL:
            if np.iscomplexobj(arr):
                if np.any(arr.imag != 0):
                    raise ValueError("real field requested for complex entries")
                arr = arr.real
            arr = np.asarray(arr, dtype=float)
        else:
            arr = np.asarray(arr, dtype=complex)
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrices contain non-finite entries")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "matrices", arr)
        object.__setattr__(self, "field", field)

    @property
    def m(self) -> int:
        return self.matrices.shape[0]

    @property
    def p(self) -> int:
        return self.matrices.shape[1]

    @property
    def q(self) -> int:
        return self.matrices.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.p, self.q, self.m)

    @property
    def dtype(self):
        return self.matrices.dtype

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrices))

    def is_real_valued(self) -> bool:
        return not np.iscomplexobj(self.matrices) or bool(np.all(self.matrices.imag == 0))

    def with_field(self, field: Field | str) -> "RepTuple":
        return RepTuple(self.matrices, Field(field))

    def act(self, g: np.ndarray, h: np.ndarray) -> "RepTuple":
        """Left-right action ``Y_i -> g Y_i h^{-1}``."""
        Z = g @ self.matrices @ np.linalg.inv(h)
        field = self.field
        if np.iscomplexobj(Z) and field is Field.REAL:
            field = Field.COMPLEX
        return RepTuple(Z, field)

    def stacked_columns(self) -> np.ndarray:
        """The ``p x (m q)`` matrix ``[Y_1 ... Y_m]``."""
        return np.concatenate(list(self.matrices), axis=1)

    def stacked_rows(self) -> np.ndarray:
        """The ``(m p) x q`` matrix with the ``Y_i`` stacked vertically."""
        return self.matrices.reshape(self.m * self.p, self.q)

    @classmethod
    def random(cls, p: int, q: int, m: int, field: Field | str = Field.REAL, rng=None) -> "RepTuple":
        """Independent standard (real or circular complex) Gaussian entries."""
        rng = np.random.default_rng(rng)
        field = Field(field)
        if field is Field.REAL:
            return cls(rng.standard_normal((m, p, q)), field)
        z = rng.standard_normal((m, p, q)) + 1j * rng.standard_normal((m, p, q))
        return cls(z / np.sqrt(2.0), field)

    @classmethod
    def from_list(cls, matrices, field: Field | str = Field.REAL) -> "RepTuple":
        return cls(np.array(matrices, dtype=complex if Field(field) is Field.COMPLEX else float), field)

    @classmethod
    def block_diagonal(cls, blocks: list["RepTuple"], field: Field | str | None = None) -> "RepTuple":
        m = blocks[0].m
        if any(b.m != m for b in blocks):
            raise ValueError("all blocks need the same number of matrices")
        if field is None:
            field = Field.COMPLEX if any(b.field is Field.COMPLEX for b in blocks) else Field.REAL
        p = sum(b.p for b in blocks)
        q = sum(b.q for b in blocks)
        out = np.zeros((m, p, q), dtype=complex if Field(field) is Field.COMPLEX else float)
        i = j = 0
        for b in blocks:
            out[:, i : i + b.p, j : j + b.q] = b.matrices
            i += b.p
            j += b.q
        return cls(out, field)

    # JSON input format: {"p","q","m","field","matrices", optional "matrices_imag"}
    def to_json_dict(self) -> dict:
        out = {
            "p": self.p,
            "q": self.q,
            "m": self.m,
            "field": self.field.value,
            "matrices": self.matrices.real.tolist(),
        }
        if self.field is Field.COMPLEX:
            out["matrices_imag"] = self.matrices.imag.tolist()
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "RepTuple":
        try:
            p, q, m = int(data["p"]), int(data["q"]), int(data["m"])
            field = Field(data.get("field", "real"))
            re = np.array(data["matrices"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed sample file: {exc}") from exc
        if re.shape != (m, p, q):
            raise ValueError(f"matrices have shape {re.shape}, expected {(m, p, q)}")
        arr = re
        if data.get("matrices_imag") is not None:
            im = np.array(data["matrices_imag"], dtype=float)
            if im.shape != re.shape:
                raise ValueError("matrices_imag shape does not match matrices")
            arr = re + 1j * im
            if field is Field.REAL and np.any(im != 0):
                raise ValueError("imaginary parts given for a real sample")
        return cls(arr, field)
