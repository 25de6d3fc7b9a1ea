"""Contextual ranking bandits under the user browsing model"""

__version__ = "0.1.0"
