"""EMF exposure and coverage statistics for beamforming cellular networks.

Analytic characteristic-function machinery plus Monte Carlo cross-checks
for downlink networks with directional antenna arrays, Nakagami-m fading,
and Poisson-distributed base stations on a finite disk.
"""

__version__ = "0.1.0"
