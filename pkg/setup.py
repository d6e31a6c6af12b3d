import os

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    np = None

# Set PERMSTAT_NO_EXT=1 to install the pure-Python fallback only.
ext_modules = []
if np is not None and not os.environ.get("PERMSTAT_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "permstat._kernels",
                ["src/permstat/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # keep a*b+c as two roundings so results match the NumPy fallback
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
