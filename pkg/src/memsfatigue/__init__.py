"""Vibration fatigue test bench for 3-axis MEMS accelerometers.

Compiles standard fatigue test conditions into schedules, runs them against a
simulated (or real) vibration rig, takes in-situ characterization
measurements, and compares before/after specimen populations.
"""

__version__ = "0.1.0"
