"""Weight sequences and the partial-sum statistics the inequalities consume.

A weight sequence is evaluable at any index j >= 1; explicit lists refuse
evaluation past their recorded length.  The derived statistics deliberately
over-reach the requested horizon: the coefficient b_k reads running maxima of
partial sums through index 4k, and the even/odd variants read the raw weights
through index 8k, so ``compute_stats(w, n)`` needs w evaluable up to 8n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .finite_prob import ValidationError

__all__ = [
    "WeightSequence",
    "WeightStats",
    "weight_eval",
    "compute_stats",
    "parse_weight_spec",
]


class WeightSequence:
    """Real weight sequence a_1, a_2, ... of one of four kinds.

    constant c       a_j = c
    power alpha      a_j = j ** alpha
    explicit list    a_j looked up (error past the end)
    alternating base a_j = (-1) ** (j - 1) * |base_j|
    """

    def __init__(self, kind, *, value=None, exponent=None, entries=None, base=None):
        self.kind = kind
        self.value = value
        self.exponent = exponent
        self.entries = None if entries is None else np.asarray(entries, dtype=float)
        self.base = base
        if kind == "constant":
            if value is None or not np.isfinite(value):
                raise ValidationError("constant weight needs a finite value")
        elif kind == "power":
            if exponent is None or not np.isfinite(exponent):
                raise ValidationError("power weight needs a finite exponent")
        elif kind == "explicit":
            if self.entries is None or self.entries.ndim != 1 or self.entries.size == 0:
                raise ValidationError("explicit weights need a nonempty list")
            if not np.all(np.isfinite(self.entries)):
                raise ValidationError("explicit weights must be finite")
        elif kind == "alternating":
            if not isinstance(base, WeightSequence):
                raise ValidationError("alternating weights need a base sequence")
        else:
            raise ValidationError(f"unknown weight kind {kind!r}")

    @classmethod
    def constant(cls, value: float) -> "WeightSequence":
        return cls("constant", value=float(value))

    @classmethod
    def power(cls, exponent: float) -> "WeightSequence":
        return cls("power", exponent=float(exponent))

    @classmethod
    def explicit(cls, entries) -> "WeightSequence":
        return cls("explicit", entries=entries)

    @classmethod
    def alternating(cls, base: "WeightSequence") -> "WeightSequence":
        return cls("alternating", base=base)

    def eval(self, j: int) -> float:
        if j < 1:
            raise ValidationError(f"weight index {j} must be >= 1")
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "power":
            return float(j) ** self.exponent
        if self.kind == "explicit":
            if j > self.entries.size:
                raise ValidationError(
                    f"explicit weight list of length {self.entries.size} "
                    f"cannot be evaluated at index {j}"
                )
            return float(self.entries[j - 1])
        sign = 1.0 if j % 2 == 1 else -1.0
        return sign * abs(self.base.eval(j))

    def eval_range(self, upto: int) -> np.ndarray:
        """Array ``a`` with a[j] = a_j for j = 1..upto (a[0] unused, zero).

        Delegates to :meth:`eval` entry by entry so batch and pointwise
        evaluation are bit-identical.
        """
        if upto < 1:
            raise ValidationError("range must reach at least index 1")
        if self.kind == "explicit" and upto > self.entries.size:
            raise ValidationError(
                f"explicit weight list of length {self.entries.size} "
                f"cannot be evaluated at index {upto}"
            )
        out = np.empty(upto + 1)
        out[0] = 0.0
        for j in range(1, upto + 1):
            out[j] = self.eval(j)
        return out

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant:{self.value:g}"
        if self.kind == "power":
            return f"power:{self.exponent:g}"
        if self.kind == "explicit":
            return f"explicit:len{self.entries.size}"
        return f"alternating:{self.base.describe()}"

    def __repr__(self):  # pragma: no cover
        return f"WeightSequence({self.describe()})"


def weight_eval(w: WeightSequence, j: int) -> float:
    """a_j for the given sequence."""
    return w.eval(j)


@dataclass(frozen=True)
class WeightStats:
    """Partial-sum statistics of a weight sequence up to horizon n.

    All arrays are 1-based: entry k holds the order-k statistic, entry 0 is a
    zero pad (sums) or unused (coefficients).  Sums and running maxima extend
    to index 4n because b_k reads the running maximum at 4k; the even/odd sums
    do the same for their own coefficients.

    s[k]       a_1 + .. + a_k                      (k <= 4n)
    s_star[k]  max_{1<=j<=k} |s[j]|                (k <= 4n)
    b[k]       max(s_star[4k]^2 / k, s[k]^2 - s[k-1]^2)      (k <= n)
    s_e[k]     a_2 + a_4 + .. + a_{2k}             (k <= 4n)
    s_o[k]     a_1 + a_3 + .. + a_{2k-1}           (k <= 4n)
    b_e, b_o   as b, built from the even/odd sums  (k <= n)
    b_star[k]  max(b_e[k], b_o[k])                 (k <= n)
    """

    n: int
    s: np.ndarray
    s_star: np.ndarray
    b: np.ndarray
    s_e: np.ndarray
    s_o: np.ndarray
    s_e_star: np.ndarray
    s_o_star: np.ndarray
    b_e: np.ndarray
    b_o: np.ndarray
    b_star: np.ndarray


def _partial_sums(a_vals: np.ndarray) -> np.ndarray:
    out = np.zeros(a_vals.size)
    out[1:] = np.cumsum(a_vals[1:])
    return out


def _running_abs_max(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    out[1:] = np.maximum.accumulate(np.abs(s[1:]))
    return out


def _b_coefficients(s: np.ndarray, s_star: np.ndarray, n: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    quadratic = s_star[4 * k] ** 2 / k
    increments = s[k] ** 2 - s[k - 1] ** 2
    out = np.full(n + 1, np.nan)
    out[1:] = np.maximum(quadratic, increments)
    return out


def compute_stats(w: WeightSequence, n: int) -> WeightStats:
    """All derived statistics for horizon n; needs a_j through index 8n."""
    if n < 1:
        raise ValidationError("horizon must be >= 1")
    a = w.eval_range(8 * n)
    s = _partial_sums(a[: 4 * n + 1])
    s_star = _running_abs_max(s)
    b = _b_coefficients(s, s_star, n)

    even = np.zeros(4 * n + 1)
    even[1:] = a[2 : 8 * n + 1 : 2]
    odd = np.zeros(4 * n + 1)
    odd[1:] = a[1 : 8 * n : 2]
    s_e = _partial_sums(even)
    s_o = _partial_sums(odd)
    s_e_star = _running_abs_max(s_e)
    s_o_star = _running_abs_max(s_o)
    b_e = _b_coefficients(s_e, s_e_star, n)
    b_o = _b_coefficients(s_o, s_o_star, n)
    b_star = np.maximum(b_e, b_o)

    for arr in (s, s_star, b, s_e, s_o, s_e_star, s_o_star, b_e, b_o, b_star):
        arr.flags.writeable = False
    return WeightStats(
        n=n, s=s, s_star=s_star, b=b,
        s_e=s_e, s_o=s_o, s_e_star=s_e_star, s_o_star=s_o_star,
        b_e=b_e, b_o=b_o, b_star=b_star,
    )


def parse_weight_spec(text: str) -> WeightSequence:
    """Parse the CLI mini-language for weight sequences.

    ``constant:1.0`` | ``power:-0.5`` | ``explicit:@weights.json`` |
    ``alternating:<spec>`` (sign flips applied to the nested spec).
    """
    head, sep, rest = text.partition(":")
    if not sep:
        raise ValidationError(f"weight spec {text!r} has no ':'")
    if head == "constant":
        return WeightSequence.constant(_parse_float(rest, text))
    if head == "power":
        return WeightSequence.power(_parse_float(rest, text))
    if head == "explicit":
        if not rest.startswith("@"):
            raise ValidationError(
                f"explicit weight spec must point at a JSON file: {text!r}"
            )
        try:
            with open(rest[1:], "r", encoding="utf-8") as fh:
                entries = json.load(fh)
        except OSError as exc:
            raise ValidationError(f"cannot read weight file {rest[1:]!r}: {exc}")
        except json.JSONDecodeError as exc:
            raise ValidationError(f"weight file {rest[1:]!r} is not JSON: {exc}")
        if not isinstance(entries, list):
            raise ValidationError(f"weight file {rest[1:]!r} must hold a JSON list")
        return WeightSequence.explicit(entries)
    if head == "alternating":
        return WeightSequence.alternating(parse_weight_spec(rest))
    raise ValidationError(f"unknown weight kind in spec {text!r}")


def _parse_float(raw: str, full: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(f"bad number in weight spec {full!r}")
