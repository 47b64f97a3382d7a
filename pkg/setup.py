import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("PHASEDD_NO_EXT"):
    try:
        from Cython.Build import cythonize
        import numpy as np

        ext_modules = cythonize(
            [Extension("phasedd._lms_core", ["src/phasedd/_lms_core.pyx"],
                       include_dirs=[np.get_include()],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
