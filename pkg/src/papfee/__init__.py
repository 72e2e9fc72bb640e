"""Energy-efficient, fair trajectory learning for a portable access point (PAP) drone."""

__version__ = "0.1.0"
