"""Transaction-level simulator and bit-exact functional model of a
stochastic-computing optical CNN accelerator and two analog optical baselines."""

__version__ = "0.1.0"
