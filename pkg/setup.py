from setuptools import setup, find_packages


setup(
    name="firerisk",
    version='0.1',
    description='Bushfire intensity risk classification from fused '
                'satellite, weather and vegetation data',
    packages=find_packages(exclude=['tests']),
    python_requires='>=3.10',
    install_requires=[
        'joblib',
        'matplotlib',
        'numpy',
        'pandas',
        'pydantic>=2',
        'scipy',
        'tensorboardX',
        'tomli; python_version < "3.11"',
        'torch',
        'tqdm',
    ],
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['firerisk=firerisk.cli:main']},
)
