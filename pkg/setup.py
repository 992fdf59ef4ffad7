"""Build script for the compiled convolution kernels.

The extension is optional: if it fails to build or import, the package
falls back to the pure-numpy kernels in ``freqlens.kernels.conv_numpy``.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "freqlens.kernels._convext",
        sources=["src/freqlens/kernels/_convext.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    pass

setup(ext_modules=ext_modules)
