"""Shared fixtures; heavyweight language resources load once per session."""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from granary.asr_filters import AsrFilterConfig, AsrFilterResources
from granary.ast_filters import AstFilterConfig, AstFilterResources
from granary.text_lid import LexiconLidClassifier

settings.register_profile(
    "suite",
    max_examples=100,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def asr_resources() -> AsrFilterResources:
    return AsrFilterResources.from_config(AsrFilterConfig())


@pytest.fixture(scope="session")
def ast_resources() -> AstFilterResources:
    return AstFilterResources.from_config(AstFilterConfig())


@pytest.fixture(scope="session")
def classifier() -> LexiconLidClassifier:
    return LexiconLidClassifier.from_dir()


@pytest.fixture(scope="session")
def charset(asr_resources) -> frozenset[str]:
    return asr_resources.charset
