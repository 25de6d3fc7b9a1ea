"""Synthetic worlds and feature pipeline"""
