"""Build script: compiles the optional simplex pivot kernel.

The package works without the extension (a numpy fallback is selected at
import time), so any compilation failure degrades to a pure-Python build
instead of aborting the install.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "disparity_bounds.lp._kernel",
                ["src/disparity_bounds/lp/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps the C loop bit-identical to the
                # numpy fallback (no fused multiply-add contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    warnings.warn(f"building without compiled kernel: {exc}")

setup(ext_modules=ext_modules)
