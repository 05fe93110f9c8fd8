# -*- test-case-name: evactrace.test.test_formats -*-
"""
Readers and writers for the files the pipeline exchanges between
stages: pings, homes, classifications, ground truth and the metric
tables.

Instants are written as ISO-8601 UTC strings; an absent instant is an
empty field. Coordinates carry seven decimals.
"""

__all__ = [
    'FormatError',
    'writePings',
    'writeHomes',
    'readHomes',
    'writeClassifications',
    'readClassifications',
    'TruthRecord',
    'writeTruth',
    'readTruth',
    'writeCompliance',
    'complianceGeoJSON',
    'writeCurves',
    'writeProportions',
    'writeCompositions',
    'writeSampling',
]

import collections
import json
import logging

import numpy as np
import pandas as pd

from evactrace import geo
from evactrace import timeutil
from evactrace.classifier import ClassificationResult, ResidentLabel
from evactrace.home_inference import HomeLocation
from evactrace.metrics import UNDEFINED
from evactrace.scenario import HomePlacement, LocationClass

logger = logging.getLogger(__name__)

COORD_FORMAT = '%.7f'

PING_COLUMNS = ['device_id', 'timestamp', 'lat', 'lon', 'accuracy_m']
HOME_COLUMNS = ['device_id', 'lat', 'lon', 'cell_col', 'cell_row',
                'night_ping_count']
CLASSIFICATION_COLUMNS = ['device_id', 'label', 'reason_code', 'home_lat',
                          'home_lon', 'tract_id', 'zone_id', 't_l', 't_e',
                          't_r', 'location_class']
TRUTH_COLUMNS = ['agent_id', 'label', 't_e', 'home_lat', 'home_lon']

TruthRecord = collections.namedtuple('TruthRecord',
                                     ['agent_id', 'label', 't_e', 'home'])


class FormatError(ValueError):
    """A stage file lacks a column or holds an unreadable value."""


def _isoColumn(timestamps):
    """ISO-8601 strings for an int64 array of instants."""
    stamps = np.asarray(timestamps, dtype=np.int64).astype('datetime64[s]')
    return np.char.add(np.datetime_as_string(stamps, unit='s'), 'Z')


def _optionalIso(when):
    return timeutil.formatInstant(when)


def _optionalInstant(text):
    text = text.strip()
    return timeutil.parseInstant(text) if text else None


def _rate(value):
    """A Fraction rate as a float, UNDEFINED as an empty field."""
    return '' if value is UNDEFINED else repr(float(value))


def _toCsv(frame, f):
    frame.to_csv(f, index=False, lineterminator='\n',
                 float_format=COORD_FORMAT)


def _readTable(source, columns, what):
    frame = pd.read_csv(source, dtype=str, keep_default_na=False)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise FormatError('%s file lacks column(s) %s' %
                          (what, ', '.join(missing)))
    return frame


def writePings(f, pings):
    """Write a canonical ping frame in the ingest schema."""
    out = pd.DataFrame({
        'device_id': pings['device_id'].to_numpy(),
        'timestamp': _isoColumn(pings['timestamp'].to_numpy()),
        'lat': pings['lat'].to_numpy(),
        'lon': pings['lon'].to_numpy(),
        'accuracy_m': pings['accuracy_m'].to_numpy(),
    }, columns=PING_COLUMNS)
    out.to_csv(f, index=False, lineterminator='\n', na_rep='',
               float_format=COORD_FORMAT)


def writeHomes(f, homes):
    ids = sorted(homes)
    _toCsv(pd.DataFrame({
        'device_id': ids,
        'lat': [homes[i].point.lat for i in ids],
        'lon': [homes[i].point.lon for i in ids],
        'cell_col': [homes[i].cell.col for i in ids],
        'cell_row': [homes[i].cell.row for i in ids],
        'night_ping_count': [homes[i].night_ping_count for i in ids],
    }, columns=HOME_COLUMNS), f)


def readHomes(source):
    """@returns: device_id to HomeLocation"""
    frame = _readTable(source, HOME_COLUMNS, 'homes')
    homes = {}
    for row in frame.itertuples(index=False):
        try:
            homes[row.device_id] = HomeLocation(
                row.device_id, geo.GeoPoint(float(row.lat), float(row.lon)),
                geo.CellIndex(int(row.cell_col), int(row.cell_row)),
                int(row.night_ping_count))
        except ValueError as why:
            raise FormatError('homes row for %r: %s' % (row.device_id, why))
    return homes


def writeClassifications(f, results):
    rows = []
    for r in sorted(results, key=lambda r: r.device_id):
        rows.append({
            'device_id': r.device_id,
            'label': r.label.value,
            'reason_code': r.reason_code,
            'home_lat': COORD_FORMAT % r.home.lat if r.home else '',
            'home_lon': COORD_FORMAT % r.home.lon if r.home else '',
            'tract_id': r.tract_id or '',
            'zone_id': r.zone_id or '',
            't_l': _optionalIso(r.t_l),
            't_e': _optionalIso(r.t_e),
            't_r': _optionalIso(r.t_r),
            'location_class': r.placement.location_class.value,
        })
    _toCsv(pd.DataFrame(rows, columns=CLASSIFICATION_COLUMNS), f)


def readClassifications(source):
    """@rtype: [ClassificationResult]"""
    frame = _readTable(source, CLASSIFICATION_COLUMNS, 'classifications')
    results = []
    for row in frame.itertuples(index=False):
        try:
            placement = HomePlacement(row.device_id,
                                      LocationClass(row.location_class),
                                      row.zone_id or None, None,
                                      row.tract_id or None)
            home = None
            if row.home_lat and row.home_lon:
                home = geo.GeoPoint(float(row.home_lat), float(row.home_lon))
            results.append(
                ClassificationResult(row.device_id, ResidentLabel(row.label),
                                     placement, row.reason_code,
                                     _optionalInstant(row.t_l),
                                     _optionalInstant(row.t_e),
                                     _optionalInstant(row.t_r), home))
        except ValueError as why:
            raise FormatError('classification row for %r: %s' %
                              (row.device_id, why))
    return results


def writeTruth(f, truth):
    ids = sorted(truth)
    _toCsv(pd.DataFrame({
        'agent_id': ids,
        'label': [truth[i].label.value for i in ids],
        't_e': [_optionalIso(truth[i].t_e) for i in ids],
        'home_lat': [truth[i].home.lat for i in ids],
        'home_lon': [truth[i].home.lon for i in ids],
    }, columns=TRUTH_COLUMNS), f)


def readTruth(source):
    """@returns: agent_id to TruthRecord"""
    frame = _readTable(source, TRUTH_COLUMNS, 'truth')
    truth = {}
    for row in frame.itertuples(index=False):
        truth[row.agent_id] = TruthRecord(
            row.agent_id, ResidentLabel(row.label), _optionalInstant(row.t_e),
            geo.GeoPoint(float(row.home_lat), float(row.home_lon)))
    return truth


def writeCompliance(f, records):
    _toCsv(pd.DataFrame([{
        'area_id': r.area_id,
        'period_start': _optionalIso(r.period[0]),
        'period_end': _optionalIso(r.period[1]),
        'M': r.M,
        'N': r.N,
        'alpha': _rate(r.alpha),
    } for r in records], columns=['area_id', 'period_start', 'period_end',
                                  'M', 'N', 'alpha']), f)


def complianceGeoJSON(records, s, area_kind='tract'):
    """Area polygons carrying their compliance rate, for choropleths.

    The C{ALL_ZONES} record has no polygon of its own and is left out.
    """
    if area_kind == 'tract':
        geometry = dict((t.tract_id, t.geometry) for t in s.tracts)
    else:
        geometry = dict((z.zone_id, z.geometry) for z in s.zones)
    features = []
    for r in records:
        if r.area_id not in geometry:
            continue
        features.append({
            'type': 'Feature',
            'properties': {
                'area_id': r.area_id,
                'M': r.M,
                'N': r.N,
                'alpha': None if r.alpha is UNDEFINED else float(r.alpha),
            },
            'geometry': geometry[r.area_id].to_geojson(),
        })
    doc = {'type': 'FeatureCollection', 'features': features}
    return json.dumps(doc, indent=1, sort_keys=True).encode('utf-8')


def writeCurves(f, curves):
    rows = []
    for curve in curves:
        for k, (boundary, count) in enumerate(
                zip(curve.bins, curve.cumulative)):
            rows.append({
                'bin': k,
                'boundary': _optionalIso(boundary),
                'group': curve.name,
                'cumulative': count,
            })
    _toCsv(pd.DataFrame(rows, columns=['bin', 'boundary', 'group',
                                       'cumulative']), f)


def writeProportions(f, proportions):
    """@param proportions: list of GroupProportions"""
    rows = []
    for p in proportions:
        for label in ResidentLabel:
            rows.append({
                'universe': p.universe.value,
                'label': label.value,
                'count': p.counts[label],
                'share': repr(float(p.shares[label])),
            })
    _toCsv(pd.DataFrame(rows, columns=['universe', 'label', 'count',
                                       'share']), f)


def writeCompositions(f, compositions):
    """@param compositions: tract_id to GroupProportions"""
    rows = []
    for tract_id in sorted(compositions):
        p = compositions[tract_id]
        for label in ResidentLabel:
            rows.append({
                'tract_id': tract_id,
                'label': label.value,
                'count': p.counts[label],
                'share': repr(float(p.shares[label])),
            })
    _toCsv(pd.DataFrame(rows, columns=['tract_id', 'label', 'count',
                                       'share']), f)


def writeSampling(f, s, homes, signals, rates, low_sample):
    """Per-tract sampling table.

    @param homes: tract_id to inferred home count
    @param signals: tract_id to resident ping count
    @param rates: tract_id to rate
    @param low_sample: tract ids flagged as too small
    """
    _toCsv(pd.DataFrame([{
        'tract_id': t.tract_id,
        'population': t.population,
        'homes': homes.get(t.tract_id, 0),
        'signals': signals.get(t.tract_id, 0),
        'rate': _rate(rates.get(t.tract_id, UNDEFINED)),
        'low_sample': 'true' if t.tract_id in low_sample else 'false',
    } for t in s.tracts], columns=['tract_id', 'population', 'homes',
                                   'signals', 'rate', 'low_sample']), f)
