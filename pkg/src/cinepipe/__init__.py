"""Staged cinematic video generation toolkit.

Planning, screenplay construction, storyboard routing, clip generation
and trajectory-guided transitions, with every generative model behind a
mockable client so the whole pipeline runs offline.
"""

__version__ = "0.1.0"
