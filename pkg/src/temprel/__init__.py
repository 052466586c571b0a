"""Temporal relation learning between events: label schemes, interval
algebra reasoning, EM and bootstrapped classifiers, and global repair."""

__version__ = "0.1.0"
