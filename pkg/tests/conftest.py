import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scenariocov.config import AnalysisConfig
from scenariocov.pipeline import process_recording
from scenariocov.synth import ManeuverScript, VehiclePlan, generate


@pytest.fixture(scope="session")
def follow_recording():
    """Ego 2 follows leader 1, 40 m ahead, both at 30 m/s for 60 s."""
    script = ManeuverScript(
        lane_count=3, duration_s=60.0,
        vehicles=(VehiclePlan(1, 1, 40.0, 30.0),
                  VehiclePlan(2, 1, 0.0, 30.0)))
    recording, _ = generate(script)
    return recording


@pytest.fixture(scope="session")
def follow_result(follow_recording):
    return process_recording(follow_recording, AnalysisConfig())
