from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "embmix.mixture._kernels",
        ["src/embmix/mixture/_kernels.pyx"],
    )
]

setup(ext_modules=cythonize(extensions, language_level="3"))
