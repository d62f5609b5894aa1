import numpy as np
import pytest

from cfrpnet.dataset import FIELD_BOUNDS, SpecimenRecord


def make_records(n=40, seed=0, with_rupture=False):
    """Plausible in-range records for tests that just need valid data.

    Labels are arbitrary smooth functions of the inputs, not mechanics.
    """
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(n):
        d = rng.uniform(100.0, 300.0)
        nt = rng.uniform(0.1, 2.0)
        ef = rng.uniform(50.0, 400.0)
        fco = rng.uniform(15.0, 80.0)
        eco = rng.uniform(0.18, 0.4)
        ecc = eco * rng.uniform(1.5, 6.0)
        fcc = fco * rng.uniform(1.1, 2.5)
        records.append(SpecimenRecord(
            d=d, h=2.0 * d, nt=nt, ef=ef, fco=fco, eco=eco, ecc=ecc, fcc=fcc,
            eps_h_rup=rng.uniform(0.005, 0.015) if with_rupture else None,
        ))
    return records


@pytest.fixture
def records():
    return make_records()


def table1_extremes():
    """Two records sitting exactly on the reference min/max bounds."""
    low = SpecimenRecord(**{f: FIELD_BOUNDS[f][0] for f in FIELD_BOUNDS})
    high = SpecimenRecord(**{f: FIELD_BOUNDS[f][1] for f in FIELD_BOUNDS})
    return [low, high]
