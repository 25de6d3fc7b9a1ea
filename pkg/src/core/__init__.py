"""Core bandit types, ridge regression and exploration schedule"""
