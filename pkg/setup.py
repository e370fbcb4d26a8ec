"""Build script for the optional compiled stepping kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compilation only costs speed, not functionality.
"""

import sys

from setuptools import Extension, setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"ksmix: skipping compiled kernel ({exc})", file=sys.stderr)
        return []
    return cythonize(
        [
            Extension(
                "ksmix._stepper_cy",
                ["src/ksmix/_stepper_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=_extensions())
