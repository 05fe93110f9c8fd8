import importlib
import unittest


class DataDrivenTestCase(unittest.TestCase):
    """A test case built once per entry of C{cases}.

    Tuple entries are spread over the constructor's arguments; any other
    entry is passed as the single argument. Subclasses implement
    C{runOneTest} and describe their case to this constructor.
    """
    cases = []

    @classmethod
    def caseTests(cls):
        return [
            cls(*case) if isinstance(case, tuple) else cls(case)
            for case in cls.cases
        ]

    def __init__(self, description):
        unittest.TestCase.__init__(self, 'runOneTest')
        self.description = description

    def shortDescription(self):
        return '%s for %s' % (type(self).__name__, self.description)


def loadTests(module_name):
    """Every test of a module: data-driven classes expand to one test
    per case, other test cases load as usual."""
    module = importlib.import_module(module_name)
    loader = unittest.defaultTestLoader
    suite = unittest.TestSuite()
    for _, obj in sorted(vars(module).items()):
        if not (isinstance(obj, type) and issubclass(obj, unittest.TestCase)):
            continue
        if obj is DataDrivenTestCase:
            continue
        if issubclass(obj, DataDrivenTestCase):
            suite.addTests(obj.caseTests())
        else:
            suite.addTests(loader.loadTestsFromTestCase(obj))
    if not suite.countTestCases():
        raise AssertionError('%s defines no tests' % (module_name, ))
    return suite
