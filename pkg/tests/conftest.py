import numpy as np
import pytest

import dualstage as ds


@pytest.fixture(scope="session")
def comm_cfg():
    return ds.load_preset("communication")


@pytest.fixture
def frame_cfg():
    return ds.FrameConfig()


def no_hpf(cfg):
    """Copy of cfg with the high-pass stage disabled."""
    d = ds.config_to_dict(cfg)
    d["frame"]["hpf_cutoff_hz"] = None
    return ds.config_from_dict(d)


def with_mu(cfg, mu, stages=("stage1", "stage2")):
    """Copy of cfg with the given mu in the chosen stages."""
    d = ds.config_to_dict(cfg)
    for stage in stages:
        d[stage]["gains"]["mu"] = mu
    return ds.config_from_dict(d)
