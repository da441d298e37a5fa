"""splatfx: text-driven real-time animation of 3D Gaussian splat scenes.

Natural-language prompts are turned into sandboxed time-varying field
programs (via an LLM pipeline with VLM scoring and refinement) that
animate the centers, colors, and opacities of a pre-segmented set of
Gaussian splats.
"""

__version__ = "0.1.0"
