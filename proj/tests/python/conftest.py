import os
import sys

# prefer an installed package; fall back to the cmake build tree
try:
    import polyhom._core  # noqa: F401
except ImportError:
    root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    sys.path.insert(0, os.path.join(root, "python"))
    sys.path.insert(0, os.path.join(root, "build"))
    import _core
    sys.modules["polyhom._core"] = _core
