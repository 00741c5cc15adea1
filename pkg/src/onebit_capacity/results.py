"""Small value types shared by the capacity modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple


class MCEstimate(NamedTuple):
    """Monte Carlo estimate with its standard error."""

    value: float
    std_err: float


TERM_NAMES = ("dimension_term", "volume_term", "alpha_term")


@dataclass(frozen=True)
class CapacityEstimate:
    """A capacity value with its additive breakdown.

    ``terms`` maps each of ``dimension_term``, ``volume_term`` and
    ``alpha_term`` to its contribution; ``bits_per_use`` is their sum.
    ``asymptotic`` means the value holds up to an o(1) term as the number of
    receive antennas grows. ``std_err`` is set for Monte Carlo backed values.
    """

    bits_per_use: float
    terms: dict[str, float]
    method: str
    asymptotic: bool = True
    std_err: float | None = None
    unit: str = "bits"
    extra: dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_terms(cls, method: str, asymptotic: bool = True, std_err: float | None = None,
                   **terms: float) -> "CapacityEstimate":
        full = {name: float(terms.get(name, 0.0)) for name in TERM_NAMES}
        unknown = set(terms) - set(TERM_NAMES)
        if unknown:
            raise ValueError(f"unknown terms: {sorted(unknown)}")
        return cls(math.fsum(full.values()), full, method, asymptotic, std_err)

    def in_nats(self) -> "CapacityEstimate":
        if self.unit == "nats":
            return self
        k = math.log(2.0)
        return replace(
            self,
            bits_per_use=self.bits_per_use * k,
            terms={name: v * k for name, v in self.terms.items()},
            std_err=None if self.std_err is None else self.std_err * k,
            unit="nats",
        )

    def as_record(self) -> dict[str, object]:
        rec: dict[str, object] = {
            "method": self.method,
            "value": self.bits_per_use,
            "unit": self.unit,
            "asymptotic": self.asymptotic,
            "std_err": self.std_err,
        }
        rec.update(self.terms)
        rec.update(self.extra)
        return rec
