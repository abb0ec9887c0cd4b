"""Built-in catalog of reference initial conditions.

Keys are ``n{N}-{kind}-{energy fraction}``; values are (x0, y0, px0, py0) at
x=0 with the stated fraction of the critical energy.  Entries marked
``derived`` were computed with this package (symmetry-line search for the
periodic ones, a Lyapunov scan for the chaotic one) and frozen here so batch
runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

from .system import State, SystemParams


@dataclass(frozen=True)
class CatalogEntry:
    key: str
    n: int
    kind: str            # periodic | quasi | chaotic
    energy_fraction: float
    ic: tuple[float, float, float, float]
    source: str          # "reference" or "derived"


_ENTRIES = [
    CatalogEntry("n3-periodic-0.25", 3, "periodic", 0.25,
                 (0.0, -0.21341508, 0.17656123, 0.0), "reference"),
    CatalogEntry("n3-quasi-0.75", 3, "quasi", 0.75,
                 (0.0, 0.15, 0.479322, 0.0), "reference"),
    CatalogEntry("n3-chaotic-0.99", 3, "chaotic", 0.99,
                 (0.0, 0.1, 0.520545, 0.23), "reference"),
    CatalogEntry("n4-periodic-0.25", 4, "periodic", 0.25,
                 (0.0, 0.0, 0.32666587, 0.13523834), "reference"),
    CatalogEntry("n4-quasi-0.75", 4, "quasi", 0.75,
                 (0.0, -0.4, 0.234521, -0.4), "reference"),
    CatalogEntry("n4-chaotic-0.99", 4, "chaotic", 0.99,
                 (0.0, -0.3, 0.640312, 0.0), "reference"),
    # derived entries (see module docstring), frozen after search
    CatalogEntry("n3-periodic-0.75", 3, "periodic", 0.75,
                 (0.0, -0.37231278352871444, 0.27744786526638526, 0.0), "derived"),
    CatalogEntry("n3-chaotic-0.75", 3, "chaotic", 0.75,
                 (0.0, -0.25, 0.1142730647761461, -0.405), "derived"),
]

CATALOG: dict[str, CatalogEntry] = {e.key: e for e in _ENTRIES}


def list_keys() -> list[str]:
    return [e.key for e in _ENTRIES]


def get(key: str) -> CatalogEntry:
    try:
        return CATALOG[key]
    except KeyError:
        raise KeyError(
            f"unknown initial-condition key {key!r}; valid keys: {', '.join(list_keys())}"
        ) from None


def initial_state(key: str) -> tuple[SystemParams, State]:
    e = get(key)
    x, y, px, py = e.ic
    return SystemParams(n=e.n), State(0.0, x, y, px, py)


def trio(n: int, energy_fraction: float) -> dict[str, CatalogEntry]:
    """periodic/quasi/chaotic entries available at one (n, energy) slice."""
    out = {}
    for e in _ENTRIES:
        if e.n == n and abs(e.energy_fraction - energy_fraction) < 1e-12:
            out[e.kind] = e
    return out
