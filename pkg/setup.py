import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps the compiled kernels bitwise identical to the
# pure-Python fallback (no fused multiply-add contraction)
extensions = [
    Extension(
        "glshrink._ckernels",
        ["src/glshrink/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": 3}))
