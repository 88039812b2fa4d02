"""Python surface of the robust pre-processing lab.

Thin re-export of the compiled module; see the package README for the C++
core and the `cropd` command line tool.
"""

try:  # installed layout: the extension lives inside this package
    from ._cropd import *  # noqa: F401,F403
    from ._cropd import __version__  # noqa: F401
except ImportError:  # build-tree layout: extension on PYTHONPATH
    from _cropd import *  # noqa: F401,F403
    from _cropd import __version__  # noqa: F401
