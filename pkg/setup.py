from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "pnormlab._kernels",
                ["src/pnormlab/_kernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython available: the package still works through the pure-python
    # kernel fallback selected at import time.
    extensions = []

setup(ext_modules=extensions)
