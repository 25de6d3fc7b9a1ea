"""Test package"""