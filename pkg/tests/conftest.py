import json
from pathlib import Path

import pytest

from hitlist6.synth import generate_corpus, write_corpus

ROOT = Path(__file__).resolve().parent.parent


def small_scenario(seed: int = 5) -> dict:
    """A few hundred devices touching every planted phenomenon."""
    spec = json.loads((ROOT / "scenarios" / "demo.json").read_text())
    spec["seed"] = seed
    spec["duration"] = 3 * 86400
    for a in spec["ases"]:
        a["devices"] = a["devices"] // 4
    spec["mobility"] = [
        {"device": "commuter", "schedule": [[0, 64500], [43200, 64503], [86400, 64500], [129600, 64503]]},
        {"device": "switcher", "schedule": [[0, 64500], [86400, 64501]]},
    ]
    return spec


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(small_scenario())


@pytest.fixture(scope="session")
def small_inputs(tmp_path_factory, small_corpus):
    out = tmp_path_factory.mktemp("small_in")
    return write_corpus(small_corpus, out)
