"""Executable model of a capability-routed component system.

Subpackages: ``manifest`` (declaration language), ``topology`` (instance
tree and lifecycle), ``routing`` (capability resolution), ``zircon``
(kernel-object and handle simulator), ``pkg`` (Merkle package integrity),
``namespace`` (per-component mounts and sandbox path rules).
"""

__version__ = "0.1.0"
