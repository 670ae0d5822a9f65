"""Desk-scale gradient-projection adversarial attacks on neural machine translation."""
