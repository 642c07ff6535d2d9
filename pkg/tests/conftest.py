import os

import pytest


def pytest_collection_modifyitems(config, items):
    if os.getenv("RBG_HUBS_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="long acceptance suite; set RBG_HUBS_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def _isolated_outputs(tmp_path, monkeypatch):
    monkeypatch.setenv("RBG_HUBS_OUTPUT_ROOT", str(tmp_path / "outs"))
    monkeypatch.delenv("RBG_HUBS_WORKERS", raising=False)
    monkeypatch.delenv("RBG_HUBS_EDGE_EPSILON", raising=False)
    monkeypatch.delenv("RBG_HUBS_LOG_MAX_BYTES", raising=False)
