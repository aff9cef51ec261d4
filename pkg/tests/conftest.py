import numpy as np
import pytest

from twistorlab.charts import builtin_chart


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def charts():
    names = ["flat", "s4_round", "cp2_fubini_study", "cp2_fubini_study_reversed", "s2xs2"]
    return {n: builtin_chart(n) for n in names}
