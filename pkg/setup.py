from setuptools import setup, find_packages

setup(
    name="telegraph_dynamics",
    version="1.0.0",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "python-dotenv",
    ],
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["telegraph-dynamics=src.main:main"]},
    python_requires=">=3.8",
)
