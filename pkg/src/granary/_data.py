"""Locations of the data files shipped with the package."""

from __future__ import annotations

from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent / "data"

CHARSET_FILE = DATA_DIR / "charset.txt"
PHRASES_DIR = DATA_DIR / "phrases"
HISTOGRAMS_DIR = DATA_DIR / "histograms"
LEXICONS_DIR = DATA_DIR / "lexicons"
PNC_EXEMPLARS_DIR = DATA_DIR / "pnc_exemplars"
