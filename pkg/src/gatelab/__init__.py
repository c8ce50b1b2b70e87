"""gatelab: a laboratory for current-input-conditioned recurrent gating.

Core pieces: five recurrent cell variants with exact analytic gradients
(cells), the windowed classifier with backprop through time and SGD
training (network), window losses (losses), a synthetic streaming
benchmark plus feature-file ingestion (datagen), frame-level calibrated
AP metrics (metrics), binary checkpoints (checkpoint), and operator
surfaces (cli, service).
"""

__version__ = "0.1.0"
