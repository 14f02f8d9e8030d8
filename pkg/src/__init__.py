"""
epsilon-kit - Core Package

This package contains the core components of epsilon-kit:
- numerics: extended reals, intervals, grids and tolerances
- functions / sets: convex function and set descriptions
- transforms: conjugates, infimal convolution, regularity conditions
- subdiff: eps-subdifferentials and their calculus rules
- parametric: value functions of parametric convex programs
- oracle: brute-force reference sets
- cli / data_loader / visualization: scenario runner, loader and SVG reports
"""

__version__ = "0.1.0"
