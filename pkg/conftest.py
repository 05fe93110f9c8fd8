"""Pytest wiring for the data-driven unittest cases.

The test modules expand L{DataDrivenTestCase} subclasses through the
unittest C{load_tests} hook, which pytest does not call. This collects
each such class as one item per case, built by the class's own
C{caseTests}, and runs it as unittest would.
"""
import unittest

import pytest

from evactrace.test.datadriven import DataDrivenTestCase


class _CaseFailure(Exception):
    pass


class DataDrivenItem(pytest.Item):

    def __init__(self, *, case, **kwargs):
        super().__init__(**kwargs)
        self.case = case

    def runtest(self):
        result = unittest.TestResult()
        self.case.run(result)
        problems = result.errors + result.failures
        if result.unexpectedSuccesses:
            problems.append((self.case, 'unexpected success'))
        if problems:
            raise _CaseFailure('\n'.join(text for _, text in problems))
        if result.skipped:
            pytest.skip(result.skipped[0][1])

    def repr_failure(self, excinfo):
        if isinstance(excinfo.value, _CaseFailure):
            return str(excinfo.value)
        return super().repr_failure(excinfo)

    def reportinfo(self):
        return self.path, None, self.name


class DataDrivenCollector(pytest.Collector):

    def __init__(self, *, case_class, **kwargs):
        super().__init__(**kwargs)
        self.case_class = case_class

    def collect(self):
        for index, case in enumerate(self.case_class.caseTests()):
            yield DataDrivenItem.from_parent(
                self, name='case%d[%s]' % (index, case.description),
                case=case)


@pytest.hookimpl(tryfirst=True)
def pytest_pycollect_makeitem(collector, name, obj):
    if (isinstance(obj, type) and issubclass(obj, DataDrivenTestCase)
            and obj is not DataDrivenTestCase):
        return DataDrivenCollector.from_parent(collector, name=name, case_class=obj)
    if obj is DataDrivenTestCase:
        return []
    return None
