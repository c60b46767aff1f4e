"""rispool: a desk-scale RIS resource-pool simulator and configuration service.

The package couples a varactor-based reflecting element model, a geometric
multi-user MIMO channel simulator, and a service-style control plane that
leases pooled reflecting elements to subscribing UEs and tunes them with
model-free probe-and-feedback optimization.
"""

__version__ = "0.1.0"
