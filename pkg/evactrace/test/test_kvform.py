import unittest

from evactrace import kvform
from evactrace.test import datadriven
from evactrace.test.support import CatchLogs


class KVBaseTest(datadriven.DataDrivenTestCase, CatchLogs):
    def checkWarnings(self, num_warnings):
        warnings = self.logged(name='evactrace.kvform')
        self.assertEqual(num_warnings, len(warnings), repr(warnings))

    def setUp(self):
        CatchLogs.setUp(self)

    def tearDown(self):
        CatchLogs.tearDown(self)


class KVDictTest(KVBaseTest):
    cases = [
        # (kvform, parsed dictionary, expected warnings)
        ('', {}, 0),
        ('tz = America/Los_Angeles\n', {
            'tz': 'America/Los_Angeles'
        }, 0),
        ('ignition = 2019-10-24T04:27:00Z\nhorizon_days = 12\n', {
            'ignition': '2019-10-24T04:27:00Z',
            'horizon_days': '12'
        }, 0),

        # Values may contain the separator
        ('note = a = b\n', {
            'note': 'a = b'
        }, 0),

        # Comments and blank lines are silent
        ('# settings\n\ncell_size_m = 20\n', {
            'cell_size_m': '20'
        }, 0),

        # Warnings from lines with no separator
        ('x\n', {}, 1),
        ('x\nx\n', {}, 2),
        ('East is least\n', {}, 1),

        # Warning from an empty key, which is skipped
        ('= missing key\n', {}, 1),

        # Surrounding whitespace is insignificant
        ('  tz=UTC  \n', {
            'tz': 'UTC'
        }, 0),

        # A repeated key keeps the last value
        ('workers = 2\nworkers = 4\n', {
            'workers': '4'
        }, 1),
    ]

    def __init__(self, kv, dct, warnings):
        KVBaseTest.__init__(self, repr(kv))
        self.kvform = kv
        self.dict = dct
        self.expected_warnings = warnings

    def runOneTest(self):
        d = kvform.kvToDict(self.kvform)
        self.assertEqual(self.dict, d)
        self.checkWarnings(self.expected_warnings)

        # dict -> kv -> dict is the identity
        self.assertEqual(d, kvform.kvToDict(kvform.dictToKV(d)))


class KVSeqTest(KVBaseTest):
    cases = [
        ([], '', 0),
        ([('pings', 'pings.csv'), ('zones', 'zones.geojson')],
         'pings = pings.csv\nzones = zones.geojson\n', 0),

        # Order is preserved, not sorted
        ([('b', '1'), ('a', '2')], 'b = 1\na = 2\n', 0),

        # Non-string values are converted without complaint
        ([('retained_count', 42)], 'retained_count = 42\n', 0),

        # Surrounding whitespace warns but survives serialisation
        ([('tz', ' UTC')], 'tz =  UTC\n', 1),
        ([('study_end', '')], 'study_end = \n', 0),
    ]

    def __init__(self, seq, kv, expected_warnings):
        KVBaseTest.__init__(self, repr(seq))
        self.seq = seq
        self.kvform = kv
        self.expected_warnings = expected_warnings

    def runOneTest(self):
        actual = kvform.seqToKV(self.seq)
        self.assertEqual(self.kvform.encode('utf-8'), actual)
        self.assertTrue(isinstance(actual, bytes))

        expected = [(k, str(v).strip()) for k, v in self.seq]
        self.assertEqual(expected, kvform.kvToSeq(actual))
        self.checkWarnings(self.expected_warnings)


class KVExcTest(datadriven.DataDrivenTestCase):
    cases = [
        [('key with\nnewline', 'value')],
        [('key', 'value with\nnewline')],
        [('key=equals', 'value')],
    ]

    def __init__(self, seq):
        datadriven.DataDrivenTestCase.__init__(self, repr(seq))
        self.seq = seq

    def runOneTest(self):
        self.assertRaises(kvform.KVFormError, kvform.seqToKV, self.seq)


class StrictTest(unittest.TestCase):
    def test_malformedLineRaises(self):
        with self.assertRaises(kvform.KVFormError) as cm:
            kvform.kvToSeq('a = 1\nbroken\n', strict=True)
        self.assertIn('Line 2', str(cm.exception))

    def test_duplicateKeyRaises(self):
        self.assertRaises(kvform.KVFormError, kvform.kvToDict,
                          'a = 1\na = 2\n', strict=True)

    def test_bytesInput(self):
        self.assertEqual([('tz', 'UTC')], kvform.kvToSeq(b'tz = UTC\n'))


def load_tests(loader, tests, pattern):
    return datadriven.loadTests(__name__)
