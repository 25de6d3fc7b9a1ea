"""Experiment harness: configuration, execution and reporting"""
