# -*- test-case-name: evactrace.test.test_home_inference -*-
"""
Proxy home locations: the centroid of the grid cell where a resident's
pre-fire nighttime pings are densest.

Ties between equally visited cells go to the cell visited most
recently, then to the lowest (row, col), so a run gives the same homes
whatever order its input arrives in.
"""

__all__ = [
    'NightWindow',
    'HomeLocation',
    'HomeInferenceResult',
    'nighttime_filter',
    'infer_home',
    'infer_all_homes',
    'most_visited_cells',
]

import logging

import numpy as np
import pandas as pd

from evactrace import geo
from evactrace import timeutil

logger = logging.getLogger(__name__)


class NightWindow(object):
    """Local clock interval [start, end), wrapping midnight when start
    is later than end.

    @ivar start: seconds after local midnight
    @ivar end: seconds after local midnight
    @ivar tz: IANA zone the clock is read in
    """

    def __init__(self, start=22 * timeutil.HOUR, end=6 * timeutil.HOUR,
                 tz='UTC'):
        if start == end:
            raise ValueError('night window is empty')
        self.start = int(start)
        self.end = int(end)
        self.tz = tz

    @classmethod
    def fromConfig(cls, config):
        return cls(config.night_start, config.night_end, config.tz)

    @property
    def wraps(self):
        return self.start > self.end

    def mask(self, timestamps):
        """Which of C{timestamps} fall inside the window."""
        _, seconds = timeutil.wallClock(timestamps, self.tz)
        if self.wraps:
            return (seconds >= self.start) | (seconds < self.end)
        return (seconds >= self.start) & (seconds < self.end)

    def nightKeys(self, timestamps):
        """The local date each night began on, as datetime64[D].

        Pings after midnight of a wrapping window belong to the
        previous date's night.
        """
        dates, seconds = timeutil.wallClock(timestamps, self.tz)
        return np.where(seconds < self.end, dates - np.timedelta64(1, 'D'),
                        dates)

    def __repr__(self):
        return '<NightWindow [%s, %s) %s>' % (timeutil.formatClock(
            self.start), timeutil.formatClock(self.end), self.tz)


class HomeLocation(object):
    """An inferred residence.

    @ivar device_id: the resident
    @ivar point: centroid of C{cell}
    @type point: L{evactrace.geo.GeoPoint}
    @ivar cell: most visited nighttime cell
    @type cell: L{evactrace.geo.CellIndex}
    @ivar night_ping_count: night pings in C{cell}
    @ivar out_of_grid_count: night pings dropped for lying off the grid
    """

    def __init__(self, device_id, point, cell, night_ping_count,
                 out_of_grid_count=0):
        if night_ping_count < 1:
            raise ValueError('a home needs at least one night ping')
        self.device_id = device_id
        self.point = point
        self.cell = cell
        self.night_ping_count = int(night_ping_count)
        self.out_of_grid_count = int(out_of_grid_count)

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<HomeLocation %s (%.6f, %.6f) cell=(%d, %d) n=%d>' % (
            self.device_id, self.point.lat, self.point.lon, self.cell.col,
            self.cell.row, self.night_ping_count)


class HomeInferenceResult(object):
    """Homes for a resident set.

    @ivar homes: device_id to HomeLocation
    @ivar excluded: sorted device ids with no usable night ping
    @ivar grid: the grid the homes were counted on
    """

    def __init__(self, homes, excluded, grid):
        self.homes = homes
        self.excluded = excluded
        self.grid = grid

    def __len__(self):
        return len(self.homes)


def nighttime_filter(trace, w):
    """The pings of C{trace} inside night window C{w}, order kept.

    @type trace: L{evactrace.ingest.DeviceTrace}
    @type w: NightWindow
    """
    return trace.subset(w.mask(trace.timestamps))


def most_visited_cells(keys, timestamps, cols, rows):
    """Pick the densest cell for each group key.

    Ties go to the cell visited last, then to the lowest (row, col).

    @param keys: group key per ping (device id, night, ...)
    @returns: (keys, cols, rows, counts, last_visits), one entry per
        distinct key in key order
    @rtype: tuple of numpy.ndarray
    """
    keys = np.asarray(keys)
    if keys.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return keys, empty, empty, empty, empty

    unique_keys, key_idx = np.unique(keys, return_inverse=True)
    cells, inverse = np.unique(
        np.stack([key_idx.ravel(), np.asarray(rows, dtype=np.int64),
                  np.asarray(cols, dtype=np.int64)], axis=1),
        axis=0, return_inverse=True)
    inverse = inverse.ravel()
    counts = np.bincount(inverse)
    last = np.full(len(cells), np.iinfo(np.int64).min, dtype=np.int64)
    np.maximum.at(last, inverse, np.asarray(timestamps, dtype=np.int64))

    order = np.lexsort((cells[:, 2], cells[:, 1], -last, -counts, cells[:, 0]))
    group = cells[order, 0]
    first = order[np.r_[True, group[1:] != group[:-1]]]
    return (unique_keys[cells[first, 0]], cells[first, 2], cells[first, 1],
            counts[first], last[first])


def infer_home(night_pings, g):
    """Home of one resident from their night pings.

    @type night_pings: L{evactrace.ingest.DeviceTrace}
    @type g: L{evactrace.geo.GridSpec}

    @returns: the home, or None when no night ping lies on the grid
    @rtype: HomeLocation or NoneType
    """
    if len(night_pings) == 0:
        return None
    cols, rows, inside = geo.cell_indices(night_pings.lats, night_pings.lons,
                                          g)
    dropped = int((~inside).sum())
    if dropped:
        logger.debug('%s: %d night pings outside the grid',
                     night_pings.device_id, dropped)
    if not inside.any():
        return None

    _, best_cols, best_rows, counts, _ = most_visited_cells(
        np.zeros(int(inside.sum()), dtype=np.int64),
        night_pings.timestamps[inside], cols[inside], rows[inside])
    cell = geo.CellIndex(int(best_cols[0]), int(best_rows[0]))
    return HomeLocation(night_pings.device_id, geo.cell_centroid(cell, g),
                        cell, int(counts[0]), dropped)


def infer_all_homes(residents, pre_fire, w, g=None, cell_size_m=20.0):
    """Homes for every resident with at least one night ping on the
    grid.

    @param residents: device ids
    @param pre_fire: canonical pre-fire ping frame
    @param w: night window
    @type w: NightWindow

    @param g: grid; when None, one covering C{pre_fire} with
        C{cell_size_m} cells
    @type g: L{evactrace.geo.GridSpec}

    @rtype: HomeInferenceResult
    """
    residents = set(residents)
    if g is None and len(pre_fire):
        g = geo.GridSpec.covering(pre_fire['lat'].to_numpy(),
                                  pre_fire['lon'].to_numpy(), cell_size_m)

    frame = pre_fire[pre_fire['device_id'].isin(residents)]
    ts = frame['timestamp'].to_numpy()
    night = w.mask(ts) if len(frame) else np.zeros(0, dtype=bool)
    frame = frame[night]

    homes = {}
    if len(frame):
        ids = frame['device_id'].to_numpy()
        cols, rows, inside = geo.cell_indices(frame['lat'].to_numpy(),
                                              frame['lon'].to_numpy(), g)
        dropped = pd.Series(~inside).groupby(ids).sum()
        if dropped.any():
            logger.warning('%d night pings fell outside the grid',
                           int(dropped.sum()))

        best = most_visited_cells(ids[inside],
                                  frame['timestamp'].to_numpy()[inside],
                                  cols[inside], rows[inside])
        for device_id, col, row, count, _ in zip(*best):
            cell = geo.CellIndex(int(col), int(row))
            homes[device_id] = HomeLocation(
                device_id, geo.cell_centroid(cell, g), cell, int(count),
                int(dropped.get(device_id, 0)))

    excluded = sorted(residents - set(homes))
    if excluded:
        logger.info('%d residents have no night pings and get no home',
                    len(excluded))
    logger.info('Inferred %d homes for %d residents', len(homes),
                len(residents))
    return HomeInferenceResult(homes, excluded, g)
