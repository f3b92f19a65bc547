"""Two-slit which-way detector simulator.

Gaussian packets entangled with cavity modes, complementarity measures,
position-measurement quantum erasure and a wave/particle superposition
protocol, each closed form paired with a numerical check.
"""

__version__ = "0.1.0"
