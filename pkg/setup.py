import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DIVLAB_SKIP_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "divlab._ckern",
                    ["src/divlab/_ckern.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        # No Cython toolchain: install pure-Python only, the import-time
        # selector in divlab.kernels falls back automatically.
        ext_modules = []

setup(ext_modules=ext_modules)
