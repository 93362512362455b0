from setuptools import Extension, setup

setup(
    ext_modules=[
        Extension(
            "mcsmodel._native",
            sources=["src/mcsmodel/_native.c"],
            extra_compile_args=["-O2", "-std=c11", "-pthread"],
            extra_link_args=["-pthread"],
        )
    ]
)
