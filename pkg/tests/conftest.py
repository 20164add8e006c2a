from datetime import datetime

import pytest

from edflow import records, simulator, timeseries


@pytest.fixture(scope="session")
def sim_profile():
    return simulator.default_profile(seed=410)


@pytest.fixture(scope="session")
def sim_records(sim_profile):
    """90 days of synthetic encounters; shared by the mid-size tests."""
    return simulator.generate(sim_profile, datetime(2014, 1, 1), datetime(2014, 4, 1))


@pytest.fixture(scope="session")
def sim_store(sim_records):
    store = records.EventStore()
    store.ingest(sim_records)
    return store


@pytest.fixture(scope="session")
def sim_frame(sim_store):
    return timeseries.build_frame(
        sim_store.snapshot(), datetime(2014, 1, 1), datetime(2014, 4, 1)
    )
