import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "blindeq.kernels._cma_cy",
                ["src/blindeq/kernels/_cma_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-python kernel fallback is selected at import time; the package
    # remains fully functional without the compiled extension.
    ext_modules = []

setup(ext_modules=ext_modules)
