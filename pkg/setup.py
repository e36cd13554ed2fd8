"""Builds the optional Cython enumeration kernel.

The package is fully functional without it: subspace_approx.enumkernel falls
back to the pure-Python implementation when the extension is missing.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "subspace_approx._enumcore",
                ["src/subspace_approx/_enumcore.pyx"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
