import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from multilevel.kernel import ModelGraph
from multilevel.fixtures import build_pizza_fixture


@pytest.fixture
def pizza():
    """Fresh demo model plus its name -> id map."""
    model = ModelGraph()
    ids = build_pizza_fixture(model)
    return model, ids
