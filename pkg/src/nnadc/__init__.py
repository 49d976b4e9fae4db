"""Behavioral model and training framework for pipelined RRAM-crossbar ADCs.

Submodules:

- ``signal_core``: ideal quantization/residue/smooth-code oracles
- ``crossbar``: differential RRAM crossbar and device grid
- ``vtc``: inverter transfer-curve activation and Monte Carlo families
- ``trainer``: hardware-aware stage training
- ``pipeline``: stage chaining, conversion, Monte Carlo robustness
- ``metrics``: spectrum, SNDR/ENOB, residue MSE
- ``dse``: composition enumeration and figure-of-merit optimization
- ``cli``: command-line front end
"""

__version__ = "0.1.0"
