from setuptools import setup, find_packages

setup(
    name="DQMASim",
    version="0.1",
    packages=find_packages(exclude=["examples", "examples.*"]),
    install_requires=["numpy", "scipy", "networkx"],
    entry_points={"console_scripts": ["dqmasim = cli.app:main"]},
)
