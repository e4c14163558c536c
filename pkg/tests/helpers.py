"""Shared draw helpers and paths for the test suite."""

from pathlib import Path

import numpy as np

from bodychannel.channel import BodyModel, GroundedTx, ReceiverParams

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"


def log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def random_receiver(rng, lossless=False, with_c_l=True, with_c_gb=True, parasitic_c_l=False):
    """Receiver draw spanning the plausible wearable/portable ranges.

    ``parasitic_c_l`` keeps the load shunt well below the return-path budget
    so the secondary L-C_L mode stays far above the resonance of interest
    (needed by peak-location properties; value identities hold regardless).
    """
    c_ret = log_uniform(rng, 0.2e-12, 5e-12)
    c_gb = float(rng.uniform(0.1e-12, 10e-12)) if with_c_gb else 0.0
    if not with_c_l:
        c_l = 0.0
    elif parasitic_c_l:
        c_l = float(rng.uniform(0.0, (c_ret + c_gb) / 10.0))
    else:
        c_l = float(rng.uniform(0.0, 5e-12))
    return ReceiverParams(
        c_ret=c_ret,
        c_gb=c_gb,
        l=log_uniform(rng, 0.05e-3, 10e-3),
        r_l=log_uniform(rng, 100.0, 10e3),
        c_l=c_l,
        r_s=0.0 if lossless else float(rng.uniform(0.0, 2e3)),
    )


def random_body(rng):
    return BodyModel(c_b=log_uniform(rng, 50e-12, 300e-12), r_b=0.0)


def unit_source():
    return GroundedTx(v_in=1.0, convention="rms")


def random_frequency(rng, lo=1.5e5, hi=8e6):
    return log_uniform(rng, lo, hi)
