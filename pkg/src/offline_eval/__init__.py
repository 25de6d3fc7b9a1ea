"""Offline replay evaluation"""
