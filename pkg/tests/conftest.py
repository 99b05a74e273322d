"""Shared test configuration: a hypothesis profile without deadlines,
since a few properties push four-photon states through real networks."""

from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")
