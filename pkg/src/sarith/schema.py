"""Bundled JSON schemas for every document the tool writes."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

NAMES = ("certificate", "cone_certificate", "homology", "enumeration", "tree", "root_data")


@lru_cache(maxsize=None)
def load(name: str) -> dict:
    if name not in NAMES:
        raise KeyError(f"no bundled schema named {name!r}")
    return json.loads(resources.files("sarith").joinpath("schemas", f"{name}.json").read_text())


def validate(doc: dict, name: str) -> None:
    """Raise jsonschema.ValidationError if ``doc`` does not match schema ``name``."""
    jsonschema.validate(doc, load(name), cls=jsonschema.Draft202012Validator)
