"""Deterministic pseudo-analysis math for the spectrometry fixtures.

These are reproducible stand-ins for instrument physics: byte-sum and
modular-residue schemes whose outputs are exact and hand-checkable.
The velocity calibration constant is pinned so the canonical demo pair
(mass=5, weight=10) yields 11.332 exactly in IEEE doubles.
"""

from __future__ import annotations

import math

VELOCITY_CALIBRATION = 5.666

ELEMENTS = ("Si", "Fe", "Mg", "Ca")
_ELEMENT_PRIMES = (3, 5, 7, 11)
_MODULUS = 97


def byte_sum(text: str) -> int:
    return sum(text.encode("utf-8"))


def particle_velocity(mass: float, weight: float) -> float:
    """Energy-shaped bounce model: v = k * sqrt(2*weight/mass)."""
    if mass <= 0:
        raise ValueError(f"mass must be positive, got {mass}")
    if weight < 0:
        raise ValueError(f"weight must be non-negative, got {weight}")
    return VELOCITY_CALIBRATION * math.sqrt(2.0 * weight / mass)


def element_abundances(h: int) -> dict[str, float]:
    """Normalized residues of h against one prime per element.

    raw_i = (h * p_i) mod 97; abundances are raw_i / sum, or uniform
    0.25 when every residue is zero.  Results always sum to 1.
    """
    raw = [(h * p) % _MODULUS for p in _ELEMENT_PRIMES]
    total = sum(raw)
    if total == 0:
        return {e: 0.25 for e in ELEMENTS}
    return {e: r / total for e, r in zip(ELEMENTS, raw)}


def xray_abundances(sample_id: str) -> dict[str, float]:
    return element_abundances(byte_sum(sample_id))


def vaporized_composition(rock_id: str, laser_power: float) -> dict[str, float]:
    if laser_power < 0:
        raise ValueError(f"laser power must be non-negative, got {laser_power}")
    return element_abundances(byte_sum(rock_id) + math.floor(laser_power))


def contains_carbon(sample_id: str) -> bool:
    return byte_sum(sample_id) % 2 == 0


def contains_oxygen(sample_id: str) -> bool:
    return byte_sum(sample_id) % 3 == 0
