"""Ranking policies"""
