"""Build the optional compiled Markov kernel.

The package works without it; ``aloof.decoherence.markov`` falls back to the
numpy implementation when the extension is missing.
"""

import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ALOOF_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "aloof.decoherence._markov_kernel",
                    ["src/aloof/decoherence/_markov_kernel.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
