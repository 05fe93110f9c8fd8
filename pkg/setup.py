import re
from os.path import abspath, dirname, join

from setuptools import setup


def readVersion():
    init = join(dirname(abspath(__file__)), 'evactrace', '__init__.py')
    with open(init, encoding='utf8') as f:
        match = re.search(r'^version_info = \((\d+), (\d+), (\d+)\)',
                          f.read(), re.M)
    return '.'.join(match.groups())


version = readVersion()

install_requires = [
    'numpy>=1.22',
    # format='ISO8601' in to_datetime arrived with 2.0
    'pandas>=2.0',
    'scipy>=1.8',
    'shapely>=2.0',
    'matplotlib>=3.5',
]

setup(
    name='evactrace',
    version=version,
    description='Home inference and wildfire-evacuation behavior from GPS '
    'pings.',
    long_description='''Infers where people live from nighttime GPS pings,
places their homes against evacuation-zone polygons, and labels each
resident's evacuation decision and departure time against the warning and
order timeline. Computes zone and tract compliance rates, cumulative
response curves and a sampling-bias regression, and ships a synthetic
generator with known ground truth for checking the pipeline end to end.''',
    packages=[
        'evactrace',
        'evactrace.store',
        'evactrace.test',
    ],
    package_data={
        'evactrace.test': ['data/*.csv', 'data/*.geojson'],
    },
    # license specified by classifier
    python_requires='>=3.8',
    install_requires=install_requires,
    extras_require={
        'test': ['defusedxml', 'coverage'],
    },
    entry_points={
        'console_scripts': ['evactrace=evactrace.cli:main'],
    },
    test_suite='evactrace.test.test_suite',
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: POSIX",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: GIS",
    ])
