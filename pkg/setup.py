import numpy
from setuptools import Extension, setup

# The correlation kernel is optional: if Cython or a C compiler is missing,
# the package falls back to the numpy implementation at import time.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "stampkit._corekernels",
                ["src/stampkit/_corekernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-march=native", "-funroll-loops"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
