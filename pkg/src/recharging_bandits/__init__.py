"""Planning and learning for multi-armed bandits with recharging payoffs."""

__version__ = "0.1.0"
