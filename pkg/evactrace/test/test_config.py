import os
import unittest

from evactrace import config
from evactrace import geo
from evactrace import timeutil
from evactrace.test.support import CatchLogs, TempDirMixin


class DefaultsTest(unittest.TestCase):
    def test_thresholds(self):
        c = config.Config()
        self.assertEqual(250.0, c.accuracy_max_m)
        self.assertEqual(20, c.min_daily_signals)
        self.assertEqual(20.0, c.cell_size_m)
        self.assertEqual(22 * timeutil.HOUR, c.night_start)
        self.assertEqual(6 * timeutil.HOUR, c.night_end)
        self.assertEqual(8.0467, c.home_buffer_d_km)
        self.assertEqual(8.0467, c.shadow_buffer_km)
        self.assertEqual(2.0, c.outside_absence_days)
        self.assertEqual(1.0, c.in_zone_absence_days)
        self.assertEqual('last_inside', c.departure_anchor)
        self.assertEqual('UTC', c.tz)
        self.assertFalse(c.categorized_only)
        self.assertEqual(12, c.horizon_days)
        self.assertIsNone(c.ignition)

    def test_buffer_is_five_miles(self):
        self.assertAlmostEqual(geo.FIVE_MILES_KM,
                               config.Config().home_buffer_d_km, places=3)

    def test_unknownKeyword(self):
        self.assertRaises(config.ConfigError, config.Config, bogus=1)


class PairsTest(CatchLogs, unittest.TestCase):
    def test_parsesTypes(self):
        c = config.Config.fromPairs([
            ('ignition', '2019-10-24T04:27:00Z'),
            ('tz', 'America/Los_Angeles'),
            ('night_start', '21:30'),
            ('categorized_only', 'yes'),
            ('delimiter', 'tab'),
            ('workers', '3'),
        ])
        self.assertEqual(1571891220, c.ignition)
        self.assertEqual('America/Los_Angeles', c.tz)
        self.assertEqual(21 * timeutil.HOUR + 30 * 60, c.night_start)
        self.assertTrue(c.categorized_only)
        self.assertEqual('\t', c.delimiter)
        self.assertEqual(3, c.workers)

    def test_laterPairsWin(self):
        c = config.Config.fromPairs([('horizon_days', '5'),
                                     ('horizon_days', '7')])
        self.assertEqual(7, c.horizon_days)

    def test_emptyValueRestoresDefault(self):
        c = config.Config.fromPairs([('cell_size_m', '50'),
                                     ('cell_size_m', '')])
        self.assertEqual(20.0, c.cell_size_m)

    def test_unknownKeyWarns(self):
        c = config.Config.fromPairs([('colour', 'blue')])
        self.assertEqual(config.Config(), c)
        self.assertEqual(1, len(self.logged(level=30)))

    def test_unknownKeyStrict(self):
        self.assertRaises(config.ConfigError, config.Config.fromPairs,
                          [('colour', 'blue')], strict=True)

    def test_badValuesCollected(self):
        with self.assertRaises(config.ConfigError) as cm:
            config.Config.fromPairs([('accuracy_max_m', '-1'),
                                     ('tz', 'Mars/Olympus'),
                                     ('departure_anchor', 'sideways')])
        msg = str(cm.exception)
        self.assertIn('accuracy_max_m', msg)
        self.assertIn('tz', msg)
        self.assertIn('departure_anchor', msg)

    def test_inconsistentWindow(self):
        self.assertRaises(config.ConfigError, config.Config.fromPairs, [
            ('study_start', '2019-10-20T00:00:00Z'),
            ('study_end', '2019-10-10T00:00:00Z'),
        ])

    def test_ignitionOutsideWindow(self):
        self.assertRaises(config.ConfigError, config.Config.fromPairs, [
            ('study_start', '2019-10-20T00:00:00Z'),
            ('ignition', '2019-10-10T00:00:00Z'),
        ])

    def test_emptyNight(self):
        self.assertRaises(config.ConfigError, config.Config.fromPairs, [
            ('night_start', '06:00'),
        ])

    def test_require(self):
        c = config.Config()
        with self.assertRaises(config.ConfigError) as cm:
            c.require('ignition', 'zones')
        self.assertIn('ignition, zones', str(cm.exception))

    def test_serialisationRoundTrip(self):
        c = config.Config.fromPairs([
            ('ignition', '2019-10-24T04:27:00Z'),
            ('study_start', '2019-10-15T07:00:00Z'),
            ('delimiter', '\\t'),
            ('shadow_buffer_km', '3.5'),
            ('curve_bins', 'local_day'),
        ])
        again = config.Config.fromPairs(
            config.kvform.kvToSeq(c.toKV()))
        self.assertEqual(c, again)


class ParseOverridesTest(unittest.TestCase):
    def test_pairs(self):
        self.assertEqual([('tz', 'UTC'), ('note', 'a=b')],
                         config.parseOverrides(['tz=UTC', ' note = a=b']))

    def test_malformed(self):
        self.assertRaises(config.ConfigError, config.parseOverrides,
                          ['tz'])


class LoadConfigTest(TempDirMixin, CatchLogs, unittest.TestCase):
    def setUp(self):
        TempDirMixin.setUp(self)
        CatchLogs.setUp(self)

    def tearDown(self):
        CatchLogs.tearDown(self)
        TempDirMixin.tearDown(self)

    def write(self, text):
        path = self.tmpPath('run.txt')
        with open(path, 'w') as f:
            f.write(text)
        return path

    def test_pathsRelativeToFile(self):
        path = self.write('# run\npings = data/pings.csv\n'
                          'zones = /abs/zones.geojson\n')
        c = config.loadConfig(path)
        self.assertEqual(os.path.join(self.tmpdir, 'data', 'pings.csv'),
                         c.path('pings'))
        self.assertEqual('/abs/zones.geojson', c.path('zones'))
        self.assertIsNone(c.path('truth'))

    def test_overridesWin(self):
        path = self.write('horizon_days = 5\n')
        c = config.loadConfig(path, [('horizon_days', '9')])
        self.assertEqual(9, c.horizon_days)

    def test_noFile(self):
        self.assertEqual(config.Config(), config.loadConfig())

    def test_strictMalformedLine(self):
        path = self.write('horizon_days = 5\nnonsense\n')
        with self.assertRaises(config.ConfigError) as cm:
            config.loadConfig(path, strict=True)
        self.assertIn('Line 2', str(cm.exception))

    def test_lenientMalformedLine(self):
        path = self.write('horizon_days = 5\nnonsense\n')
        self.assertEqual(5, config.loadConfig(path).horizon_days)

    def test_missingFile(self):
        self.assertRaises(OSError, config.loadConfig, self.tmpPath('nope'))


if __name__ == '__main__':
    unittest.main()
