"""
Quadratic Escape Engine - certified escape times for f_a(x) = a - x^2
"""
