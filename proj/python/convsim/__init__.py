"""Python surface of the memory-hierarchy simulator.

The compiled extension carries all functionality; this package only finds
it, whether installed alongside (wheel layout) or on PYTHONPATH (build
tree).
"""

try:
    from ._convsim import *  # noqa: F401,F403
    from ._convsim import __doc__  # noqa: F401
except ImportError:
    from _convsim import *  # noqa: F401,F403
    from _convsim import __doc__  # noqa: F401
