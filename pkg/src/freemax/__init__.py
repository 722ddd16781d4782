"""Classical and free upper extremal convolutions, the spectral-order maximum
of Hermitian matrices, and the limit matrix law interpolating between them."""

from .distributions import *  # noqa: F401,F403
from .errors import AmbiguousCutError, ContractError, DomainError  # noqa: F401
from .limitlaw import *  # noqa: F401,F403
from .maxstable import *  # noqa: F401,F403
from .rng import RngStream, split  # noqa: F401
from .spectral import *  # noqa: F401,F403

__version__ = "0.1.0"
