import os
import sys

from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

# Property tests are derandomized: the seed is fixed by the test database-free profile.
settings.register_profile("repro", derandomize=True, database=None, deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))
