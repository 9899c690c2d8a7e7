"""Time-domain fluorescence diffuse optical tomography in a half space."""

from ._fdot import *  # noqa: F401,F403
