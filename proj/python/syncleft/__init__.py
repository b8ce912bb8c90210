"""Joint neurotransmitter-survival / receptor-occupancy statistics of a
synaptic channel: mean-field reaction-diffusion solver, adaptive CME solver,
binomial reference models and a particle-based stochastic simulator.

The compiled extension provides everything; this package re-exports it both
from an installed wheel layout and from an in-build tree.
"""

try:
    from ._syncleft import *  # noqa: F401,F403
    from ._syncleft import __doc__ as _core_doc
except ImportError:  # in-build layout: extension sits next to the package dir
    from _syncleft import *  # noqa: F401,F403
    from _syncleft import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
