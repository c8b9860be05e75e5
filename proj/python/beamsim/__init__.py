# SPDX-License-Identifier: Apache-2.0
#
# beamsim: link-level beam management and CSI feedback simulator
# Licensed under the Apache License, Version 2.0; see
# http://www.apache.org/licenses/LICENSE-2.0 for the full text.
"""Link-level beam management and CSI feedback simulation.

The heavy lifting lives in the compiled extension; this package simply
re-exports its public surface. Matrices cross the boundary as numpy arrays
(complex128 for complex data) and configuration objects round-trip through
the same JSON text the command-line tool reads.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc  # noqa: F401
from ._core import __version__  # noqa: F401
