"""Modeling, simulation, and design optimization for resonant
electro-quasistatic body power channels.

The package is organized as:

* :mod:`bodychannel.channel`  - closed-form channel models (transfer
  function, resonance, body potential, received power)
* :mod:`bodychannel.acnet`    - generic complex-impedance AC networks and a
  modified-nodal-analysis solver used as the brute-force oracle
* :mod:`bodychannel.analysis` - sweeps, peak detection, Q estimation,
  sensitivities, and least-squares parameter calibration
* :mod:`bodychannel.optimize` - load/inductor selection, current-limited
  power maximization, multi-receiver powering, topology comparison
* :mod:`bodychannel.safety`   - contact-current estimation and compliance
  checks against configurable exposure-limit tables
* :mod:`bodychannel.cli`      - scenario configs, sweep orchestration, CSV
  emission, and measured-data import
"""

__version__ = "0.1.0"
