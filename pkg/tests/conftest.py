import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles module

from co2fuse.fusion import MatchConfig, build_dataset
from co2fuse.synth import SynthConfig, generate_campaign, write_campaign

# small, fast campaign for unit and CLI tests
SMALL_SYNTH = SynthConfig(
    seed=5, n_stations=6, n_transects=12, soundings_per_transect=80, days=120
)


@pytest.fixture(scope="session")
def small_campaign():
    return generate_campaign(SMALL_SYNTH)


@pytest.fixture(scope="session")
def small_campaign_dir(small_campaign, tmp_path_factory):
    out = tmp_path_factory.mktemp("campaign")
    write_campaign(small_campaign, out)
    return out


@pytest.fixture(scope="session")
def small_dataset(small_campaign):
    good = [s for s in small_campaign.soundings if s.quality_flag == 0]
    return build_dataset(
        good,
        small_campaign.catalog,
        small_campaign.series,
        small_campaign.archive,
        MatchConfig(),
    )
