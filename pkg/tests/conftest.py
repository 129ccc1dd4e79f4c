from pathlib import Path

import pytest

from cnctrans.adl import cnc_language
from cnctrans.rules import load_module
from cnctrans.syntax import parse_model

CORPUS = Path(__file__).parent / "corpus"
MODELS = CORPUS / "models"
MODULES = CORPUS / "modules"
GOLDEN = CORPUS / "golden"

REMOTE_NODE = (MODELS / "remote_node.arc").read_text(encoding="utf-8")


def read_model(path: Path):
    lang = cnc_language()
    return lang.normalize(parse_model(lang.grammar, None, path.read_text(encoding="utf-8"), path.name))


def model_from_text(text: str, filename: str = "model.arc"):
    lang = cnc_language()
    return lang.normalize(parse_model(lang.grammar, None, text, filename))


def read_module(name: str):
    path = MODULES / f"{name}.mtr"
    return load_module(cnc_language(), path.read_text(encoding="utf-8"), path.name)


@pytest.fixture
def lang():
    return cnc_language()
