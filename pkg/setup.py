"""Build the optional compiled kernels; the package runs without them."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("LOGTRANSLATE_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        import numpy as np
    except ImportError:
        pass
    else:
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "logtranslate._kernels",
                    ["src/logtranslate/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-ffast-math", "-march=native"],
                    extra_link_args=["-lmvec"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
