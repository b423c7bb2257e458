import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from noisediag.dataio import PromptGroup, SampleRecord

# Acceptance requires >= 100 cases per invariant; derandomize so the suite
# is reproducible run to run.
settings.register_profile(
    "suite",
    max_examples=100,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("suite")


def make_record(z, z_g, prompt_id="p0000", seed_id="s00") -> SampleRecord:
    return SampleRecord(
        prompt_id, seed_id, np.asarray(z, dtype=np.float64), np.asarray(z_g, dtype=np.float64)
    )


def make_group(displacements, prompt_id="p0000", base=None) -> PromptGroup:
    """Group whose records have the given displacements (z fixed at `base`)."""
    records = []
    for i, d in enumerate(displacements):
        d = np.asarray(d, dtype=np.float64)
        z = np.zeros_like(d) if base is None else np.asarray(base, dtype=np.float64)
        records.append(SampleRecord(prompt_id, f"s{i:02d}", z, z + d))
    return PromptGroup(prompt_id, tuple(records))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
