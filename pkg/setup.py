# Builds the optional compiled kernel extension. If Cython or a C compiler is
# unavailable the install still succeeds and the package falls back to the
# NumPy kernels at import time.
#
# Local rebuild: python setup.py build_ext --inplace
from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/frm_risk/_kernels/_spectral_cy.pyx"],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
