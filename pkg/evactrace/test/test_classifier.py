import unittest

import numpy as np

from evactrace import classifier
from evactrace import geo
from evactrace import scenario
from evactrace.classifier import ResidentLabel
from evactrace.home_inference import NightWindow
from evactrace.ingest import DeviceTrace
from evactrace.scenario import EvacZone, Scenario
from evactrace.test import datadriven
from evactrace.test.support import (DAY, HOUR, IGNITION, ORIGIN, CatchLogs,
                                    basicScenario, homeAt, hourlyTrace,
                                    offset, square, traceFrame)

IN_ZONE_HOME = ORIGIN
NEAR_HOME = offset(13, 0)
FAR_AWAY = offset(0, 40)
END = IGNITION + 12 * DAY


def classify(device_id, home_point, trace, s=None, context=None,
             departure_anchor='last_inside'):
    if s is None:
        s = basicScenario()
    placement = scenario.placement_of(device_id, home_point, s)
    return classifier.classify_resident(trace, homeAt(device_id, home_point),
                                        placement, s, NightWindow(),
                                        departure_anchor, context=context)


def leaving(device_id, home, leave, back=IGNITION + 10 * DAY,
            away=FAR_AWAY, start=IGNITION, end=END):
    return hourlyTrace(device_id, home, start, end, away, leave, back)


class LabelMatrixTest(datadriven.DataDrivenTestCase):
    """Departure day against home location, everyone returning after
    the lift."""

    cases = [
        # (home, days after ignition, label, reason)
        (IN_ZONE_HOME, 1, ResidentLabel.SELF_EVACUEE, 'left_before_alert'),
        (IN_ZONE_HOME, 2, ResidentLabel.SELF_EVACUEE, 'left_before_alert'),
        (IN_ZONE_HOME, 3, ResidentLabel.EVACUEE_UNDER_WARNING,
         'left_under_warning'),
        (IN_ZONE_HOME, 5, ResidentLabel.ORDERED_EVACUEE, 'left_under_order'),
        (NEAR_HOME, 1, ResidentLabel.SELF_EVACUEE, 'left_before_alert'),
        (NEAR_HOME, 2, ResidentLabel.SELF_EVACUEE, 'left_before_alert'),
        (NEAR_HOME, 3, ResidentLabel.SHADOW_EVACUEE,
         'left_after_county_alert'),
        (NEAR_HOME, 5, ResidentLabel.SHADOW_EVACUEE,
         'left_after_county_alert'),
    ]

    def __init__(self, home, day, label, reason):
        datadriven.DataDrivenTestCase.__init__(
            self, '%s leaving on day %d' % (
                'in-zone' if home is IN_ZONE_HOME else 'near', day))
        self.home = home
        self.leave = IGNITION + day * DAY + 2 * HOUR
        self.label = label
        self.reason = reason

    def runOneTest(self):
        result = classify('dev', self.home,
                          leaving('dev', self.home, self.leave))
        self.assertEqual(self.label, result.label)
        self.assertEqual(self.reason, result.reason_code)
        self.assertEqual(self.leave, result.t_l)
        self.assertEqual(self.leave, result.t_e)
        self.assertEqual(IGNITION + 10 * DAY, result.t_r)
        self.assertEqual(self.home, result.home)
        self.assertEqual('T1', result.tract_id)


class LeafTest(unittest.TestCase):
    def assertLabel(self, label, reason, result):
        self.assertEqual((label, reason), (result.label, result.reason_code))

    def test_noPostFirePings(self):
        result = classify('dev', IN_ZONE_HOME, None)
        self.assertLabel(ResidentLabel.UNCATEGORIZED, 'no_post_fire_pings',
                         result)
        self.assertIsNone(result.t_e)

    def test_stayedInZone(self):
        trace = hourlyTrace('dev', IN_ZONE_HOME, IGNITION, END)
        self.assertLabel(ResidentLabel.NON_EVACUEE_IN_ZONE,
                         'no_qualifying_absence',
                         classify('dev', IN_ZONE_HOME, trace))

    def test_stayedNearZone(self):
        trace = hourlyTrace('dev', NEAR_HOME, IGNITION, END)
        self.assertLabel(ResidentLabel.NON_EVACUEE_OUTSIDE_ZONE,
                         'no_qualifying_absence',
                         classify('dev', NEAR_HOME, trace))

    def test_absenceThresholdsDiffer(self):
        leave = IGNITION + 10 * DAY
        back = leave + 36 * HOUR
        near = classify('dev', NEAR_HOME,
                        leaving('dev', NEAR_HOME, leave, back))
        self.assertLabel(ResidentLabel.NON_EVACUEE_OUTSIDE_ZONE,
                         'no_qualifying_absence', near)
        inside = classify('dev', IN_ZONE_HOME,
                          leaving('dev', IN_ZONE_HOME, leave, back))
        self.assertLabel(ResidentLabel.UNCATEGORIZED, 'left_after_lift',
                         inside)

    def test_openAbsenceInsufficient(self):
        leave = END - 12 * HOUR
        result = classify('dev', IN_ZONE_HOME,
                          leaving('dev', IN_ZONE_HOME, leave, None))
        self.assertLabel(ResidentLabel.UNCATEGORIZED,
                         'open_absence_insufficient', result)
        self.assertEqual(leave, result.t_l)
        self.assertIsNone(result.t_r)

    def test_openAbsenceLongEnough(self):
        leave = IGNITION + 5 * DAY + 2 * HOUR
        result = classify('dev', IN_ZONE_HOME,
                          leaving('dev', IN_ZONE_HOME, leave, None))
        self.assertLabel(ResidentLabel.ORDERED_EVACUEE, 'left_under_order',
                         result)
        self.assertIsNone(result.t_r)

    def test_stopsInZone(self):
        leave = IGNITION + DAY + 2 * HOUR
        inside = classify('dev', IN_ZONE_HOME,
                          leaving('dev', IN_ZONE_HOME, leave,
                                  away=offset(0, 9)))
        self.assertLabel(ResidentLabel.NON_EVACUEE_IN_ZONE, 'stops_in_zone',
                         inside)
        near = classify('dev', NEAR_HOME,
                        leaving('dev', NEAR_HOME, leave, away=ORIGIN))
        self.assertLabel(ResidentLabel.NON_EVACUEE_OUTSIDE_ZONE,
                         'stops_in_zone', near)
        self.assertIsNone(near.t_e)
        self.assertEqual(leave, near.t_l)

    def test_stopInLiftedZoneStillCounts(self):
        leave = IGNITION + 9 * DAY + 2 * HOUR
        result = classify('dev', NEAR_HOME,
                          leaving('dev', NEAR_HOME, leave, back=None,
                                  away=ORIGIN))
        self.assertLabel(ResidentLabel.NON_EVACUEE_OUTSIDE_ZONE,
                         'stops_in_zone', result)

    def test_returnedBeforeLift(self):
        leave = IGNITION + 5 * DAY + 2 * HOUR
        for home in (IN_ZONE_HOME, NEAR_HOME):
            result = classify('dev', home, leaving(
                'dev', home, leave, back=IGNITION + 8 * DAY))
            self.assertLabel(ResidentLabel.UNCATEGORIZED,
                             'returned_before_lift', result)

    def test_departureUnobserved(self):
        for home in (IN_ZONE_HOME, NEAR_HOME):
            result = classify('dev', home,
                              leaving('dev', home, IGNITION - 1))
            self.assertLabel(ResidentLabel.UNCATEGORIZED,
                             'departure_unobserved', result)

    def test_leftBeforeIgnition(self):
        context = hourlyTrace('dev', IN_ZONE_HOME, IGNITION - 10 * HOUR,
                              IGNITION - HOUR, FAR_AWAY,
                              IGNITION - 5 * HOUR)
        trace = leaving('dev', IN_ZONE_HOME, IGNITION - 1)
        for home in (IN_ZONE_HOME, NEAR_HOME):
            result = classify('dev', home, trace, context=context)
            self.assertLabel(ResidentLabel.UNCATEGORIZED,
                             'left_before_ignition', result)
            self.assertEqual(IGNITION - 5 * HOUR, result.t_l)

    def test_leftAfterLift(self):
        result = classify('dev', IN_ZONE_HOME, leaving(
            'dev', IN_ZONE_HOME, IGNITION + 9 * DAY + 2 * HOUR, None))
        self.assertLabel(ResidentLabel.UNCATEGORIZED, 'left_after_lift',
                         result)

    def test_orderWithoutWarning(self):
        zone = EvacZone('Z1', square(10.0), None, IGNITION + 5 * DAY,
                        IGNITION + 9 * DAY)
        s = Scenario(IGNITION, [zone])
        before = classify('dev', IN_ZONE_HOME, leaving(
            'dev', IN_ZONE_HOME, IGNITION + 2 * DAY), s=s)
        self.assertEqual(ResidentLabel.SELF_EVACUEE, before.label)
        after = classify('dev', IN_ZONE_HOME, leaving(
            'dev', IN_ZONE_HOME, IGNITION + 6 * DAY), s=s)
        self.assertEqual(ResidentLabel.ORDERED_EVACUEE, after.label)

    def test_firstOutsideAnchor(self):
        leave = IGNITION + 5 * DAY + 2 * HOUR
        result = classify('dev', IN_ZONE_HOME,
                          leaving('dev', IN_ZONE_HOME, leave),
                          departure_anchor='first_outside')
        self.assertEqual(leave + HOUR, result.t_e)

    def test_firstQualifyingEpisodeDecides(self):
        # A short trip on day 1, then a real evacuation under order
        trace = hourlyTrace('dev', IN_ZONE_HOME, IGNITION, END)
        short = (trace.timestamps > IGNITION + DAY) & \
            (trace.timestamps < IGNITION + DAY + 6 * HOUR)
        trip = (trace.timestamps > IGNITION + 6 * DAY) & \
            (trace.timestamps < IGNITION + 10 * DAY)
        trace.lats[short | trip] = FAR_AWAY.lat
        trace.lons[short | trip] = FAR_AWAY.lon
        result = classify('dev', IN_ZONE_HOME, trace)
        self.assertEqual(ResidentLabel.ORDERED_EVACUEE, result.label)
        self.assertEqual(IGNITION + 6 * DAY, result.t_e)

    def test_wrongPlacement(self):
        s = basicScenario()
        near = scenario.placement_of('dev', NEAR_HOME, s)
        inside = scenario.placement_of('dev', IN_ZONE_HOME, s)
        self.assertRaises(geo.ContractError, classifier.classify_in_zone, [],
                          near, s)
        self.assertRaises(geo.ContractError,
                          classifier.classify_outside_zone, [], inside, s)


class DetectAbsencesTest(unittest.TestCase):
    def setUp(self):
        self.home = homeAt('dev', ORIGIN)
        trace = hourlyTrace('dev', ORIGIN, IGNITION, IGNITION + 7 * DAY)
        first = (trace.timestamps > IGNITION + DAY + 2 * HOUR) & \
            (trace.timestamps < IGNITION + 3 * DAY)
        second = trace.timestamps > IGNITION + 5 * DAY + 2 * HOUR
        trace.lats[first | second] = FAR_AWAY.lat
        trace.lons[first | second] = FAR_AWAY.lon
        self.trace = trace

    def detect(self, **kw):
        return classifier.detect_absences(self.trace, self.home, 8.0467,
                                          NightWindow(), **kw)

    def test_episodes(self):
        first, second = self.detect()
        self.assertEqual(IGNITION + DAY + 2 * HOUR, first.t_l)
        self.assertEqual(IGNITION + 3 * DAY, first.t_r)
        self.assertAlmostEqual(46.0 / 24, first.duration_days)
        self.assertTrue(first.departure_observed)
        self.assertFalse(first.is_open)

        self.assertEqual(IGNITION + 5 * DAY + 2 * HOUR, second.t_l)
        self.assertTrue(second.is_open)
        self.assertAlmostEqual(46.0 / 24, second.duration_days)

    def test_nightStops(self):
        first, second = self.detect()
        self.assertEqual(2, len(first.night_stops))
        for stop in first.night_stops + second.night_stops:
            self.assertLess(geo.haversine_km(stop, FAR_AWAY), 0.03)

    def test_firstOutside(self):
        first, _ = self.detect(departure_anchor='first_outside')
        self.assertEqual(IGNITION + DAY + 3 * HOUR, first.t_l)

    def test_neverAway(self):
        trace = hourlyTrace('dev', ORIGIN, IGNITION, IGNITION + DAY)
        self.assertEqual([], classifier.detect_absences(
            trace, self.home, 8.0467, NightWindow()))

    def test_badAnchor(self):
        self.assertRaises(ValueError, self.detect, departure_anchor='middle')

    def test_episodeOrder(self):
        self.assertRaises(ValueError, classifier.AbsenceEpisode, 10, 5, [],
                          0.0)


class ResultTest(unittest.TestCase):
    def test_departureOnlyForEvacuees(self):
        s = basicScenario()
        placement = scenario.placement_of('dev', ORIGIN, s)
        self.assertRaises(ValueError, classifier.ClassificationResult, 'dev',
                          ResidentLabel.SELF_EVACUEE, placement, 'x')
        self.assertRaises(ValueError, classifier.ClassificationResult, 'dev',
                          ResidentLabel.UNCATEGORIZED, placement, 'x', t_e=1)

    def test_isEvacuee(self):
        self.assertEqual(
            set(classifier.EVACUEE_LABELS),
            set(label for label in ResidentLabel if label.is_evacuee))


class BufferMonotoneTest(unittest.TestCase):
    """Residents labeled as staying under a small home buffer also stay
    under a larger one, when every night away lies beyond both."""

    NON_EVACUEES = (ResidentLabel.NON_EVACUEE_IN_ZONE,
                    ResidentLabel.NON_EVACUEE_OUTSIDE_ZONE)
    HOMES = [ORIGIN, offset(28, 0)]
    DESTINATIONS = [offset(0, 20), offset(-20, -15), offset(0, -45),
                    offset(60, 0)]

    def scenario(self, D_km):
        zone = EvacZone('Z1', square(25.0), IGNITION + 3 * DAY,
                        IGNITION + 5 * DAY, IGNITION + 9 * DAY)
        return Scenario(IGNITION, [zone],
                        [scenario.Tract('T1', square(80.0), 1000)],
                        home_buffer_d_km=D_km)

    def randomTrace(self, rng, home):
        """Hourly pings with daytime errands at any distance and at most
        one trip, which spends its nights far from home and ends before
        the trace does."""
        ts = np.arange(IGNITION, END + 1, HOUR, dtype=np.int64)
        points = [home] * ts.size
        hours = (ts % DAY) // HOUR
        for day in np.flatnonzero(rng.random(12) < 0.5):
            errand = offset(*rng.uniform(-15, 15, 2), origin=home)
            first = int(rng.integers(9, 14))
            last = int(rng.integers(first + 1, 18))
            today = (ts - IGNITION) // DAY == day
            for i in np.flatnonzero(today & (hours >= first) &
                                    (hours < last)):
                points[i] = errand
        if rng.random() < 0.8:
            destination = self.DESTINATIONS[rng.integers(4)]
            leave = IGNITION + int(rng.integers(2 * HOUR, 6 * DAY))
            back = leave + int(rng.integers(6 * HOUR, 5 * DAY))
            for i in np.flatnonzero((ts >= leave) & (ts < back)):
                points[i] = destination
        return DeviceTrace('dev', ts, [p.lat for p in points],
                           [p.lon for p in points])

    def test_shrinkingBufferNeverAddsStayers(self):
        rng = np.random.default_rng(55)
        for _ in range(200):
            home = self.HOMES[rng.integers(2)]
            trace = self.randomTrace(rng, home)
            large = float(rng.uniform(3.0, 10.0))
            small = float(rng.uniform(0.0, large))
            labels = [
                classify('dev', home, trace, self.scenario(D)).label
                for D in (small, large)
            ]
            if labels[0] in self.NON_EVACUEES:
                self.assertIn(labels[1], self.NON_EVACUEES,
                              (small, large, labels))


class ClassifyAllTest(CatchLogs, unittest.TestCase):
    def setUp(self):
        CatchLogs.setUp(self)
        self.s = basicScenario()
        self.points = {
            'a-ordered': IN_ZONE_HOME,
            'b-shadow': NEAR_HOME,
            'c-far': offset(100, 0),
            'd-silent': IN_ZONE_HOME,
        }
        self.homes = dict((d, homeAt(d, p)) for d, p in self.points.items())
        self.placements = scenario.place_homes(self.homes, self.s)
        self.post_fire = traceFrame(
            leaving('a-ordered', IN_ZONE_HOME, IGNITION + 5 * DAY + 2 * HOUR),
            leaving('b-shadow', NEAR_HOME, IGNITION + 3 * DAY + 2 * HOUR),
            hourlyTrace('c-far', offset(100, 0), IGNITION, END))

    def classifyAll(self, **kw):
        return classifier.classify_all(
            list(self.points) + ['e-homeless'], self.homes, self.placements,
            self.post_fire, self.s, NightWindow(), **kw)

    def test_labels(self):
        results = self.classifyAll()
        self.assertEqual(['a-ordered', 'b-shadow', 'd-silent'],
                         [r.device_id for r in results])
        self.assertEqual([ResidentLabel.ORDERED_EVACUEE,
                          ResidentLabel.SHADOW_EVACUEE,
                          ResidentLabel.UNCATEGORIZED],
                         [r.label for r in results])
        self.assertEqual('no_post_fire_pings', results[2].reason_code)
        self.assertEqual(1, results.omitted)

    def test_agreesWithSingleResident(self):
        results = self.classifyAll()
        single = classify('b-shadow', NEAR_HOME,
                          leaving('b-shadow', NEAR_HOME,
                                  IGNITION + 3 * DAY + 2 * HOUR))
        self.assertEqual(single, results[1])

    def test_departureContext(self):
        pre_fire = traceFrame(hourlyTrace(
            'a-ordered', IN_ZONE_HOME, IGNITION - DAY, IGNITION - HOUR,
            FAR_AWAY, IGNITION - 5 * HOUR))
        self.post_fire = traceFrame(
            leaving('a-ordered', IN_ZONE_HOME, IGNITION - 1))
        results = self.classifyAll(pre_fire=pre_fire)
        self.assertEqual('left_before_ignition', results[0].reason_code)
        self.assertEqual(IGNITION - 5 * HOUR, results[0].t_l)

    def test_withoutContextDepartureIsUnobserved(self):
        self.post_fire = traceFrame(
            leaving('a-ordered', IN_ZONE_HOME, IGNITION - 1))
        results = self.classifyAll()
        self.assertEqual('departure_unobserved', results[0].reason_code)


def load_tests(loader, tests, pattern):
    return datadriven.loadTests(__name__)
