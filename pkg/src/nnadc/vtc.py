"""Behavioral inverter voltage-transfer characteristic (VTC).

A logistic-shaped, strictly decreasing transfer curve stands in for the
transistor-level inverter: midpoint v_m, transition scale s, output
rails.  Monte Carlo families model process variation of v_m and s.

The supply rail sits above the converter's signal full-scale vdd, and
the switching midpoint is skewed down to vdd/2 (transistor sizing).
Both are needed by the passive crossbars: the output layer's summed
weight magnitude stays below one, so the hidden swing must exceed the
residue swing, and the first layer can only pull a column up to a
fraction of its drive voltages, so the midpoint must stay reachable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Supply rail relative to the signal full-scale vdd.
SUPPLY_RATIO = 2.5
# Nominal transition scale relative to vdd (peak inverter gain 15).
TRANSITION_RATIO = 1.0 / 30.0


@dataclass(frozen=True)
class VtcParams:
    """One inverter transfer curve."""

    v_m: float
    s: float
    v_high: float
    v_low: float = 0.0

    def __post_init__(self):
        if self.s <= 0:
            raise ConfigError("transition scale must be positive")
        if not self.v_low < self.v_high:
            raise ConfigError("need v_low < v_high")


@dataclass(frozen=True)
class VariationSpec:
    """Process spread of the VTC parameters."""

    v_m_std: float = 0.0   # absolute, volts
    s_rel_std: float = 0.0  # relative to the nominal transition scale


@dataclass(frozen=True)
class VtcFamily:
    """Monte Carlo population of inverter curves."""

    members: tuple
    nominal: VtcParams
    seed: int = 0
    variation: VariationSpec = VariationSpec()

    def __post_init__(self):
        if len(self.members) < 1:
            raise ConfigError("family must have at least one member")

    def __len__(self) -> int:
        return len(self.members)

    def as_arrays(self):
        """(v_m, s, v_high, v_low) arrays over the members."""
        vm = np.array([p.v_m for p in self.members])
        s = np.array([p.s for p in self.members])
        vh = np.array([p.v_high for p in self.members])
        vl = np.array([p.v_low for p in self.members])
        return vm, s, vh, vl


def nominal_vtc(vdd: float, supply_ratio: float = SUPPLY_RATIO) -> VtcParams:
    """Nominal inverter: midpoint vdd/2, scale vdd/30, rails (0, supply)."""
    return VtcParams(v_m=vdd / 2.0, s=TRANSITION_RATIO * vdd,
                     v_high=supply_ratio * vdd, v_low=0.0)


def _logistic(z):
    """Overflow-safe logistic."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def vtc_eval(p: VtcParams, v):
    """Inverter output voltage; strictly decreasing in the input."""
    z = (p.v_m - np.asarray(v, dtype=float)) / p.s
    out = p.v_low + (p.v_high - p.v_low) * _logistic(z)
    return float(out) if np.isscalar(v) else out


def vtc_derivative(p: VtcParams, v):
    """Analytic d(vtc_eval)/dv; equals -(v_high - v_low)/(4s) at v_m."""
    z = (p.v_m - np.asarray(v, dtype=float)) / p.s
    sig = _logistic(z)
    out = -(p.v_high - p.v_low) / p.s * sig * (1.0 - sig)
    return float(out) if np.isscalar(v) else out


def sample_family(n: int, variation: VariationSpec, seed: int,
                  nominal: VtcParams) -> VtcFamily:
    """Gaussian parameter spread around the nominal curve, seed-determined."""
    if n < 1:
        raise ConfigError("family size must be at least 1")
    rng = np.random.default_rng(seed)
    members = []
    for _ in range(n):
        vm = rng.normal(nominal.v_m, variation.v_m_std) if variation.v_m_std else nominal.v_m
        s = nominal.s
        if variation.s_rel_std:
            s = rng.normal(nominal.s, variation.s_rel_std * nominal.s)
            while s <= 0:  # truncate to positive scales
                s = rng.normal(nominal.s, variation.s_rel_std * nominal.s)
        members.append(VtcParams(v_m=vm, s=s, v_high=nominal.v_high,
                                 v_low=nominal.v_low))
    return VtcFamily(members=tuple(members), nominal=nominal, seed=seed,
                     variation=variation)


def default_family(vdd: float, n: int = 100, seed: int = 0) -> VtcFamily:
    """The standard 100-member family: 2% of vdd on v_m, 10% on s."""
    nom = nominal_vtc(vdd)
    var = VariationSpec(v_m_std=0.02 * vdd, s_rel_std=0.10)
    return sample_family(n, var, seed, nom)


def pick_random(family: VtcFamily, rng: np.random.Generator) -> VtcParams:
    """Uniform draw over the family members."""
    return family.members[int(rng.integers(len(family)))]


def pick_assignment(family: VtcFamily, n: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Independent uniform member indices for ``n`` neurons."""
    return rng.integers(len(family), size=n)
