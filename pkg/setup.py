import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "cavcool._kernels",
        ["src/cavcool/_kernels.pyx"],
        include_dirs=[np.get_include(), "src/cavcool"],
        extra_compile_args=["-O3", "-march=native", "-ffast-math", "-fopenmp-simd"],
        libraries=["mvec", "m"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
