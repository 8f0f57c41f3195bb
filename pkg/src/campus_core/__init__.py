"""campus-core: a multi-tier campus information system.

A stateless HTTP web tier fronts an application-server tier that owns all
business logic, sessions, and embedded storage. Role-based workflows cover
admissions, prerequisite-gated enrollment with department-head escalation,
academic records and coursework, fees, and administrative reporting.
"""

__version__ = "0.1.0"

from .config import Config
from .errors import CampusError
from .service import CampusCore

__all__ = ["CampusCore", "CampusError", "Config", "__version__"]
