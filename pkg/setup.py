from __future__ import annotations
from setuptools import setup, find_namespace_packages

with open("README.md", "r", encoding="utf-8") as f:
    description = f.read()


setup(
    name="twinforge",
    version="0.1.0",
    description="Articulated-object digital twins from point clouds and iCEM manipulation planning on top of them",
    long_description=description,
    long_description_content_type="text/markdown",
    packages=find_namespace_packages(include=["twinforge*"]),
    entry_points={"console_scripts": ["twinforge = twinforge.cli:main"]},
    install_requires=["numpy", "scipy", "msgspec", "colorama"],
    python_requires=">=3.9",
    classifiers=[
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Typing :: Typed",
    ],
)
