import os.path
import sys
import unittest

test_module_names = [
    'kvform',
    'config',
    'timeutil',
    'geo',
    'ingest',
    'home_inference',
    'scenario',
    'classifier',
    'metrics',
    'formats',
    'filestore',
    'synth',
    'pipeline',
    'cli',
]


def addParentToPath():
    """Make the directory holding the C{evactrace} package importable
    when the tests run from a source checkout."""
    here = os.path.dirname(os.path.abspath(__file__))
    checkout = os.path.dirname(os.path.dirname(here))
    if checkout not in sys.path:
        sys.path.insert(0, checkout)


def pyUnitTests():
    """
    Aggregate unit tests from every test module. Modules with
    data-driven tests expand them through their C{load_tests} hook.
    """
    loader = unittest.TestLoader()
    return unittest.TestSuite(
        loader.loadTestsFromName('evactrace.test.test_' + name)
        for name in test_module_names)


def test_suite():
    """The suite C{setup.py test} runs."""
    addParentToPath()
    return pyUnitTests()
