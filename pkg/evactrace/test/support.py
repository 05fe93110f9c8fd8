"""Log capture and fixture builders shared by the tests."""

import logging
import os
import shutil
import tempfile

import numpy as np
import pandas as pd

from evactrace import geo
from evactrace import timeutil
from evactrace.home_inference import HomeLocation
from evactrace.ingest import COLUMNS, DeviceTrace
from evactrace.scenario import EvacZone, Scenario, Tract

HOUR = timeutil.HOUR
DAY = timeutil.DAY

DATA_DIR = os.path.join(os.path.dirname(__file__), 'data')

IGNITION = timeutil.parseInstant('2019-10-24T04:27:00Z')
ORIGIN = geo.GeoPoint(38.5, -122.8)


def dataPath(name):
    return os.path.join(DATA_DIR, name)


class RecordingHandler(logging.Handler):
    """Keeps each record's attribute dict in a caller-owned list."""

    def __init__(self, records):
        logging.Handler.__init__(self, logging.DEBUG)
        self.records = records

    def emit(self, record):
        self.records.append(record.__dict__)


class CatchLogs(object):
    """Mixin that records everything logged while a test runs."""

    def setUp(self):
        self.messages = []
        root = logging.getLogger()
        self._saved_level = root.level
        root.setLevel(logging.DEBUG)
        self.handler = RecordingHandler(self.messages)
        root.addHandler(self.handler)

    def tearDown(self):
        root = logging.getLogger()
        root.removeHandler(self.handler)
        root.setLevel(self._saved_level)

    def logged(self, name=None, level=None):
        """Formatted messages, optionally of one logger and level."""
        return [
            r['msg'] % r['args'] if r['args'] else r['msg']
            for r in self.messages
            if (name is None or r['name'] == name) and
            (level is None or r['levelno'] == level)
        ]


class TempDirMixin(object):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp('evactrace-test')

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def tmpPath(self, *parts):
        return os.path.join(self.tmpdir, *parts)


def offset(east_km, north_km, origin=ORIGIN):
    """The point C{east_km} east and C{north_km} north of C{origin}."""
    return geo.unproject(east_km * 1000.0, north_km * 1000.0, origin)


def square(half_km, east_km=0.0, north_km=0.0, origin=ORIGIN):
    """An axis-aligned square zone geometry centered off C{origin}."""
    sw = offset(east_km - half_km, north_km - half_km, origin)
    ne = offset(east_km + half_km, north_km + half_km, origin)
    return geo.ZoneGeometry.rectangle(sw.lat, sw.lon, ne.lat, ne.lon)


def basicScenario(tracts=None, **kw):
    """One 20 km square zone around ORIGIN, warned after 3 days,
    ordered after 5, lifted after 9; one large tract."""
    zone = EvacZone('Z1', square(10.0), IGNITION + 3 * DAY,
                    IGNITION + 5 * DAY, IGNITION + 9 * DAY)
    if tracts is None:
        tracts = [Tract('T1', square(40.0), 1000)]
    return Scenario(IGNITION, [zone], tracts, **kw)


def pingFrame(rows):
    """A canonical ping frame from (device, when, lat, lon, accuracy)."""
    if not rows:
        rows = []
    frame = pd.DataFrame(rows, columns=COLUMNS)
    return frame.astype({
        'device_id': object,
        'timestamp': np.int64,
        'lat': float,
        'lon': float,
        'accuracy_m': float
    })


def homeAt(device_id, point, count=10):
    return HomeLocation(device_id, point, geo.CellIndex(0, 0), count)


def hourlyTrace(device_id, home, start, end, away=None, leave=None,
                back=None, step=HOUR):
    """Pings every C{step} from C{start} to C{end} inclusive, at
    C{away} strictly after C{leave} and before C{back}, else at
    C{home}."""
    ts = np.arange(start, end + 1, step, dtype=np.int64)
    lats = np.full(ts.size, home.lat)
    lons = np.full(ts.size, home.lon)
    if away is not None:
        gone = ts > leave
        if back is not None:
            gone &= ts < back
        lats[gone] = away.lat
        lons[gone] = away.lon
    return DeviceTrace(device_id, ts, lats, lons)


def traceFrame(*traces):
    """The ping frame holding C{traces}, accuracy 10 m."""
    rows = []
    for trace in traces:
        for t, lat, lon in zip(trace.timestamps, trace.lats, trace.lons):
            rows.append((trace.device_id, int(t), lat, lon, 10.0))
    return pingFrame(rows)
