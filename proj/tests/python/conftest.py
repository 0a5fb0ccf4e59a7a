import os
import sys

# ctest points this at the build tree; an editable install's redirecting
# finder would otherwise shadow it
_tree = os.environ.get("MCFLAB_PYTHON_TREE")
if _tree:
    sys.meta_path[:] = [f for f in sys.meta_path if type(f).__name__ != "ScikitBuildRedirectingFinder"]
    sys.path.insert(0, _tree)
