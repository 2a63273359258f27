"""Bundled datasets and workflow fixtures."""

from importlib import resources
from pathlib import Path


def data_path(name: str) -> Path:
    return Path(resources.files(__package__) / name)


def heart_csv_text() -> str:
    return data_path("heart.csv").read_text()
