import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "additr._kernels",
                ["src/additr/_kernels.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level="3",
    )
else:
    # No Cython available: install the pure-Python package only; the runtime
    # backend selector falls back to additr._kernels_py.
    ext_modules = []

setup(ext_modules=ext_modules)
