"""Model registry for the experiment harness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .hilbert import ParamHamiltonian
from .tripod import COS_XI_DEFAULT, TripodParams, scan_family


@dataclass(frozen=True)
class ModelSpec:
    build: Callable[[dict, str], ParamHamiltonian]
    param_defaults: dict
    scan_coordinates: tuple
    degeneracy: int


def _build_tripod(params: dict, scan: str) -> ParamHamiltonian:
    p = TripodParams(omega0=params["omega0"], k_l=params["k_l"],
                     cos_xi=params["cos_xi"], x=params["x"], z=params["z"])
    return scan_family(p, scan)


REGISTRY: dict[str, ModelSpec] = {
    "tripod": ModelSpec(
        build=_build_tripod,
        param_defaults={
            "omega0": 1.0,
            "k_l": 1.0,
            "cos_xi": COS_XI_DEFAULT,
            "x": 1.0,
            "z": 0.0,
        },
        scan_coordinates=("x", "z"),
        degeneracy=2,
    ),
}


def get_model(name: str) -> ModelSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise KeyError(f"unknown model {name!r}; registered models: {known}") from None
