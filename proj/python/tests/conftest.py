import json
import os
import shutil
import subprocess
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[2]
SCHEMAS = ROOT / "schemas"
CONFIGS = ROOT / "configs"


def _find_bec():
    env = os.environ.get("BEC_EXE")
    if env:
        return Path(env)
    for cand in (ROOT / "build" / "bec", ROOT / "build" / "tools" / "bec"):
        if cand.exists():
            return cand
    found = shutil.which("bec")
    return Path(found) if found else None


@pytest.fixture(scope="session")
def bec():
    exe = _find_bec()
    if exe is None:
        pytest.skip("bec executable not built")
    return exe


@pytest.fixture(scope="session")
def validator():
    from jsonschema import Draft202012Validator
    from referencing import Registry, Resource

    resources = []
    for p in SCHEMAS.glob("*.schema.json"):
        doc = json.loads(p.read_text())
        resources.append((doc["$id"], Resource.from_contents(doc)))
    registry = Registry().with_resources(resources)

    def check(doc, name):
        schema = json.loads((SCHEMAS / name).read_text())
        Draft202012Validator(schema, registry=registry).validate(doc)

    return check


def run_bec(exe, *args):
    return subprocess.run([str(exe), *map(str, args)], capture_output=True, text=True, timeout=600)
