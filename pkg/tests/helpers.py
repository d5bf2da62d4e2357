from __future__ import annotations

import json
from importlib.resources import files

import jsonschema
import numpy as np
from referencing import Registry, Resource

SCHEMA_DIR = files("ringout") / "schemas"


def mean_se(x: np.ndarray) -> tuple[complex, float]:
    x = np.asarray(x)
    return x.mean(), float(np.sqrt(np.mean(np.abs(x - x.mean()) ** 2) / (x.size - 1)))


def validate(doc: object, schema_name: str) -> None:
    schema = json.loads((SCHEMA_DIR / schema_name).read_text())
    registry_store = {
        p.name: json.loads(p.read_text()) for p in SCHEMA_DIR.iterdir() if p.name.endswith(".json")
    }
    registry = Registry().with_resources(
        (name, Resource.from_contents(s)) for name, s in registry_store.items()
    )
    jsonschema.Draft202012Validator(schema, registry=registry).validate(doc)
