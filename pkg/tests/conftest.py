import pytest

from tadtw.scoping import RelativeTimeline
from tadtw.temporal import DAY


@pytest.fixture
def enroll_timeline():
    """Relative timeline used by most harness-level tests: 30 days after ENROLL."""
    return RelativeTimeline("ENROLL", "start_time", "first", 0, 30 * DAY)
