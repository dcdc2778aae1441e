"""Build the optional compiled kernels; the package falls back to numpy without them."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FACTORLAT_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension(
                "factorlat._kernels",
                ["src/factorlat/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
