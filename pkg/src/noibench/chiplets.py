"""Chiplet catalog for composing MI300X-class package models.

Seven die kinds with physical dimensions, relay capability, PHY count per edge
and process node. Port caps are derived from the PHY budget: one routable NoI
port per 16 PHYs, floored, with a minimum of 2 so every die stays connectable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class ChipletKind(enum.Enum):
    IOD = "IOD"
    IOD_MIRROR = "IOD_mirror"
    HBM3 = "HBM3"
    XCD = "XCD"
    CCD_PERF = "CCD_perf"
    CCD_DENSE = "CCD_dense"
    CCD_AI = "CCD_ai"


@dataclass(frozen=True)
class ChipletSpec:
    kind: ChipletKind
    width_mm: float
    height_mm: float
    relay_capable: bool
    phys_per_edge: int
    process_node_nm: int

    def __post_init__(self):
        if self.phys_per_edge <= 0:
            raise ValueError("phys_per_edge must be positive")
        if self.width_mm <= 0 or self.height_mm <= 0:
            raise ValueError("dimensions must be positive")

    @property
    def port_cap(self) -> int:
        return max(2, self.phys_per_edge // 16)


CATALOG: dict[ChipletKind, ChipletSpec] = {
    spec.kind: spec
    for spec in (
        ChipletSpec(ChipletKind.IOD, 24.0, 26.0, True, 128, 6),
        ChipletSpec(ChipletKind.IOD_MIRROR, 24.0, 26.0, True, 128, 6),
        ChipletSpec(ChipletKind.HBM3, 12.0, 16.0, False, 64, 10),
        ChipletSpec(ChipletKind.XCD, 11.0, 13.0, False, 64, 5),
        ChipletSpec(ChipletKind.CCD_PERF, 11.0, 13.0, False, 32, 4),
        ChipletSpec(ChipletKind.CCD_DENSE, 9.5, 11.0, False, 32, 3),
        ChipletSpec(ChipletKind.CCD_AI, 12.5, 14.0, False, 64, 3),
    )
}

# Effective per-link bandwidth: 38.4 GB/s nominal minus 3% protocol overhead,
# rounded to one decimal (38.4*0.97 = 37.248; the published figure is 37.2 and
# the cut arithmetic 8*37.2 = 297.6 only works with the rounded value).
# GB/s is numerically bytes/ns, which is the simulator's working unit.
NOMINAL_LINK_GBPS = 38.4
PROTOCOL_OVERHEAD = 0.03
DEFAULT_LINK_GBPS = 37.2


def spec_for(kind: ChipletKind | str) -> ChipletSpec:
    if isinstance(kind, str):
        kind = ChipletKind(kind)
    return CATALOG[kind]
