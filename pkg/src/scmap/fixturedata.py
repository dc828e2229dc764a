"""Paths to the bundled reference inputs (NSFNET, COST239, triangle)."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def fixture_path(name: str) -> Path:
    """Absolute path of a bundled fixture file by basename."""
    ref = resources.files("scmap").joinpath("fixtures").joinpath(name)
    path = Path(str(ref))
    if not path.exists():
        raise FileNotFoundError(name)
    return path


def nsfnet_files() -> tuple[Path, Path, Path]:
    return (
        fixture_path("nsfnet.topology.json"),
        fixture_path("chain3.chains.json"),
        fixture_path("nsfnet_mesh.demands.csv"),
    )


def cost239_files() -> tuple[Path, Path, Path]:
    return (
        fixture_path("cost239.topology.json"),
        fixture_path("chain3.chains.json"),
        fixture_path("cost239_mesh.demands.csv"),
    )


def triangle_files() -> tuple[Path, Path, Path]:
    return (
        fixture_path("triangle.topology.json"),
        fixture_path("triangle.chains.json"),
        fixture_path("triangle.demands.csv"),
    )
