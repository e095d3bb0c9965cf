"""Non-ergodic Ornstein-Uhlenbeck drift estimation under general Gaussian noise."""
__version__ = "0.1.0"
