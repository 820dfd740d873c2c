import math

import pytest

from rpcompass import FieldSpec, ModelSpec


@pytest.fixture
def reference_model():
    return ModelSpec.reference()


@pytest.fixture
def static_field():
    return FieldSpec.static(math.pi / 4)
