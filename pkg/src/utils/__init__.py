"""Utility functions package"""