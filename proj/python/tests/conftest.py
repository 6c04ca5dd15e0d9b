import os
import sys

# ctest points SFK_PYTHON_STAGE at the build tree; an editable install would
# otherwise shadow it.
_stage = os.environ.get("SFK_PYTHON_STAGE")
if _stage:
    sys.meta_path[:] = [f for f in sys.meta_path if not type(f).__module__.startswith("_editable_")]
    sys.path.insert(0, _stage)
