# -*- test-case-name: evactrace.test.test_ingest -*-
"""
Parse, validate, clean and deduplicate raw ping records, split them at
fire ignition, and select the daily-frequent users that the rest of
the pipeline treats as residents.

Pings travel between stages as C{pandas.DataFrame} objects with the
canonical columns in C{L{COLUMNS}}: C{device_id} (str), C{timestamp}
(int64 epoch seconds, UTC), C{lat} and C{lon} (float64 degrees) and
C{accuracy_m} (float64 meters, NaN when the source has none).

Malformed rows are reported on the C{evactrace.ingest.errors} logger,
one warning per row, prefixed with the row's line number.
"""

__all__ = [
    'PingRecord',
    'PingSchema',
    'DeviceTrace',
    'CleaningReport',
    'ParseErrorLog',
    'SchemaError',
    'COLUMNS',
    'parse_pings',
    'read_pings',
    'empty_frame',
    'clean_pings',
    'split_pre_post_fire',
    'pre_fire_days',
    'filter_frequent_users',
    'group_traces',
]

import collections
import csv
import datetime
import gzip
import io
import logging
import os
import re
import warnings

import numpy as np
import pandas as pd

from evactrace import kvform
from evactrace import timeutil

logger = logging.getLogger(__name__)
error_logger = logging.getLogger(__name__ + '.errors')

COLUMNS = ['device_id', 'timestamp', 'lat', 'lon', 'accuracy_m']
MANDATORY = ['device_id', 'timestamp', 'lat', 'lon']

DEDUPE_KEY = ['device_id', 'timestamp', 'lat', 'lon']

# Rows examined to decide between ISO-8601 and epoch-second timestamps
TIMESTAMP_SAMPLE = 100

_GZIP_MAGIC = b'\x1f\x8b'
_REPLACEMENT_CHAR = '\ufffd'
_SKIPPED_LINE_RE = re.compile(r'Skipping line (\d+)')

PingRecord = collections.namedtuple('PingRecord', COLUMNS)
PingRecord.__doc__ = "One timestamped device location."


class SchemaError(ValueError):
    """The input header lacks a mandatory column."""

    def __init__(self, missing, header):
        ValueError.__init__(self, missing)
        self.missing = missing
        self.header = header

    def __str__(self):
        return 'missing mandatory column(s) %s in header %s' % (
            ', '.join(repr(m) for m in self.missing), self.header)


class PingSchema(object):
    """Maps canonical field names to the column names of an input file.

    C{accuracy_m} is optional: when its column is absent every record
    has no accuracy. A C{geohash} column may be present and is ignored;
    latitude and longitude are authoritative.
    """

    def __init__(self, device_id='device_id', timestamp='timestamp',
                 lat='lat', lon='lon', accuracy_m='accuracy_m',
                 delimiter=','):
        self.columns = {
            'device_id': device_id,
            'timestamp': timestamp,
            'lat': lat,
            'lon': lon,
            'accuracy_m': accuracy_m,
        }
        self.delimiter = delimiter

    @classmethod
    def fromConfig(cls, config):
        return cls(device_id=config.col_device_id,
                   timestamp=config.col_timestamp,
                   lat=config.col_lat,
                   lon=config.col_lon,
                   accuracy_m=config.col_accuracy,
                   delimiter=config.delimiter)

    def check(self, header):
        """Raise C{L{SchemaError}} unless every mandatory column is in
        C{header}."""
        missing = [self.columns[name] for name in MANDATORY
                   if self.columns[name] not in header]
        if missing:
            raise SchemaError(missing, header)


class ParseErrorLog(object):
    """Malformed rows seen while parsing, as (line number, reason).

    Each entry is also logged on C{evactrace.ingest.errors}.
    """

    def __init__(self):
        self.entries = []

    def add(self, line_num, reason):
        self.entries.append((line_num, reason))
        error_logger.warning('line %d: %s', line_num, reason)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


class CleaningReport(object):
    """Counts from one cleaning run.

    input_count = retained_count + dropped_inaccurate +
    dropped_duplicate + dropped_out_of_bounds always holds. Reports of
    disjoint shards add up with C{+}.
    """

    fields = [
        'input_count',
        'dropped_inaccurate',
        'dropped_duplicate',
        'dropped_out_of_bounds',
        'retained_count',
    ]

    def __init__(self, input_count=0, dropped_inaccurate=0,
                 dropped_duplicate=0, dropped_out_of_bounds=0,
                 retained_count=0):
        self.input_count = input_count
        self.dropped_inaccurate = dropped_inaccurate
        self.dropped_duplicate = dropped_duplicate
        self.dropped_out_of_bounds = dropped_out_of_bounds
        self.retained_count = retained_count

    def reconciles(self):
        return self.input_count == (
            self.retained_count + self.dropped_inaccurate +
            self.dropped_duplicate + self.dropped_out_of_bounds)

    def __add__(self, other):
        return self.__class__(
            *[getattr(self, f) + getattr(other, f) for f in self.fields])

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def toKV(self):
        return kvform.seqToKV([(f, getattr(self, f)) for f in self.fields])

    @classmethod
    def fromKV(cls, data):
        d = kvform.kvToDict(data)
        return cls(*[int(d[f]) for f in cls.fields])

    def __repr__(self):
        return '<CleaningReport %s>' % ' '.join(
            '%s=%d' % (f, getattr(self, f)) for f in self.fields)


class DeviceTrace(object):
    """The time-ordered pings of one device, held as arrays.

    @ivar device_id: the device
    @ivar timestamps: int64 instants, nondecreasing
    @ivar lats: float64 degrees
    @ivar lons: float64 degrees
    """

    def __init__(self, device_id, timestamps, lats, lons):
        timestamps = np.asarray(timestamps, dtype=np.int64)
        if timestamps.size > 1 and (np.diff(timestamps) < 0).any():
            raise ValueError('trace for %r is not time-ordered' %
                             (device_id, ))
        self.device_id = device_id
        self.timestamps = timestamps
        self.lats = np.asarray(lats, dtype=float)
        self.lons = np.asarray(lons, dtype=float)

    @classmethod
    def fromRecords(cls, device_id, records):
        records = sorted(records, key=lambda r: r.timestamp)
        for r in records:
            if r.device_id != device_id:
                raise ValueError('record for %r in trace of %r' %
                                 (r.device_id, device_id))
        return cls(device_id, [r.timestamp for r in records],
                   [r.lat for r in records], [r.lon for r in records])

    def subset(self, mask):
        return self.__class__(self.device_id, self.timestamps[mask],
                              self.lats[mask], self.lons[mask])

    def __len__(self):
        return int(self.timestamps.size)

    def __iter__(self):
        for t, lat, lon in zip(self.timestamps, self.lats, self.lons):
            yield PingRecord(self.device_id, int(t), float(lat), float(lon),
                             None)

    def __repr__(self):
        return '<DeviceTrace %r %d pings>' % (self.device_id, len(self))


def empty_frame():
    return pd.DataFrame({
        'device_id': pd.Series([], dtype=object),
        'timestamp': pd.Series([], dtype=np.int64),
        'lat': pd.Series([], dtype=float),
        'lon': pd.Series([], dtype=float),
        'accuracy_m': pd.Series([], dtype=float),
    })


def _openText(source):
    """Open a path or binary stream as text, un-gzipping when the data
    starts with the gzip magic number. Undecodable bytes become
    U+FFFD so that C{L{_validate}} can reject their rows."""
    if isinstance(source, (str, bytes, os.PathLike)):
        raw = open(source, 'rb')
    else:
        raw = source

    if not hasattr(raw, 'peek'):
        raw = io.BufferedReader(raw)

    if raw.peek(2)[:2] == _GZIP_MAGIC:
        raw = gzip.GzipFile(fileobj=raw)

    return io.TextIOWrapper(raw, encoding='utf-8', errors='replace',
                            newline='')


def _detectTimestampMode(values):
    sample = [v.strip() for v in values[:TIMESTAMP_SAMPLE] if v.strip()]
    if sample and all(v.lstrip('-').isdigit() for v in sample):
        return 'epoch'
    return 'iso'


def _parseTimestamps(values, mode):
    """Instants for a column of strings; unparsable entries give -1
    with a False mask entry."""
    if mode == 'epoch':
        nums = pd.to_numeric(values, errors='coerce')
        ok = nums.notna() & (nums == np.floor(nums))
        out = nums.where(ok, 0).astype(np.int64)
        return out.to_numpy(), ok.to_numpy()

    stamps = pd.to_datetime(values, utc=True, errors='coerce',
                            format='ISO8601')
    ok = stamps.notna()
    epoch = pd.Timestamp(0, tz='UTC')
    seconds = ((stamps - epoch) // pd.Timedelta(seconds=1))
    out = seconds.where(ok, 0).astype(np.int64)
    return out.to_numpy(), ok.to_numpy()


def _lineNumbers(positions, skipped):
    """Physical line numbers of data rows.

    C{positions} are 0-based indexes among rows the CSV reader kept;
    C{skipped} are reader line numbers (1-based, after the header) of
    rows it dropped for having too many fields.
    """
    lines = np.asarray(positions, dtype=np.int64) + 1
    for bad in sorted(skipped):
        lines[lines >= bad] += 1
    # Header is line 1
    return lines + 1


def _validate(chunk, schema, mode):
    """Validate one chunk of raw string columns.

    @returns: (canonical frame of good rows, bad-row mask, reasons)
    """
    cols = schema.columns
    n = len(chunk)
    reasons = np.full(n, '', dtype=object)

    def flag(mask, reason):
        mask = np.asarray(mask) & (reasons == '')
        reasons[mask] = reason

    undecodable = np.zeros(n, dtype=bool)
    for i in range(chunk.shape[1]):
        column = chunk.iloc[:, i].fillna('').astype(str)
        undecodable |= column.str.contains(_REPLACEMENT_CHAR,
                                           regex=False).to_numpy()
    flag(undecodable, 'invalid UTF-8')

    device = chunk[cols['device_id']].fillna('').astype(str).str.strip()
    flag(device == '', 'empty device_id')

    ts_raw = chunk[cols['timestamp']].fillna('').astype(str).str.strip()
    timestamps, ts_ok = _parseTimestamps(ts_raw, mode)
    flag(~ts_ok, 'unparsable timestamp')

    lat = pd.to_numeric(chunk[cols['lat']], errors='coerce').to_numpy()
    flag(np.isnan(lat), 'lat not a number')
    with np.errstate(invalid='ignore'):
        flag((lat < -90.0) | (lat > 90.0), 'lat out of range')

    lon = pd.to_numeric(chunk[cols['lon']], errors='coerce').to_numpy()
    flag(np.isnan(lon), 'lon not a number')
    with np.errstate(invalid='ignore'):
        flag((lon < -180.0) | (lon > 180.0), 'lon out of range')

    if cols['accuracy_m'] in chunk.columns:
        acc_raw = chunk[cols['accuracy_m']].fillna('').astype(str).str.strip()
        acc = pd.to_numeric(acc_raw, errors='coerce').to_numpy()
        flag((acc_raw != '').to_numpy() & np.isnan(acc),
             'accuracy not a number')
        with np.errstate(invalid='ignore'):
            flag(acc < 0, 'negative accuracy')
    else:
        acc = np.full(n, np.nan)

    bad = reasons != ''
    good = ~bad
    frame = pd.DataFrame({
        'device_id': device.to_numpy()[good],
        'timestamp': timestamps[good],
        'lat': lat[good],
        'lon': lon[good],
        'accuracy_m': acc[good],
    })
    return frame, bad, reasons


def parse_pings(source, schema=None, errors=None, chunksize=500000):
    """Stream ping records out of delimited text with a header row.

    Every well-formed row yields one record; malformed rows are logged
    with their line number and skipped without aborting the stream.
    Gzip input is recognised by its magic number. Timestamps may be
    ISO-8601 or integer epoch seconds, decided from a sample of the
    first chunk.

    @param source: path or binary stream
    @param schema: column mapping, default C{PingSchema()}
    @type schema: PingSchema

    @param errors: collects (line, reason) for malformed rows
    @type errors: ParseErrorLog

    @returns: iterator of canonical DataFrame chunks

    @raises OSError: if the source cannot be read
    @raises SchemaError: if a mandatory column is missing
    """
    if schema is None:
        schema = PingSchema()
    if errors is None:
        errors = ParseErrorLog()

    text = _openText(source)
    try:
        header_line = text.readline()
        header = next(csv.reader([header_line],
                                 delimiter=schema.delimiter), [])
        header = [h.strip() for h in header]
        schema.check(header)

        reader = pd.read_csv(text, sep=schema.delimiter, header=None,
                             names=header, dtype=str, na_filter=False,
                             skip_blank_lines=False, on_bad_lines='warn',
                             chunksize=chunksize, engine='c')
        skipped = []
        position = 0
        mode = None
        while True:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter('always')
                try:
                    chunk = next(reader)
                except StopIteration:
                    chunk = None
            for w in caught:
                for num in _SKIPPED_LINE_RE.findall(str(w.message)):
                    skipped.append(int(num))
                    errors.add(int(num) + 1, 'wrong number of fields')
            if chunk is None:
                break

            if mode is None:
                mode = _detectTimestampMode(
                    list(chunk[schema.columns['timestamp']].fillna('')))
                logger.debug('timestamp column looks like %s', mode)

            frame, bad, reasons = _validate(chunk, schema, mode)
            if bad.any():
                rows = np.flatnonzero(bad)
                for line_num, reason in zip(
                        _lineNumbers(rows + position, skipped),
                        reasons[rows]):
                    errors.add(int(line_num), reason)
            position += len(chunk)
            if len(frame):
                yield frame
    finally:
        text.close()


def read_pings(source, schema=None, errors=None, chunksize=500000):
    """Parse a whole source into one canonical DataFrame."""
    chunks = list(parse_pings(source, schema, errors, chunksize))
    if not chunks:
        return empty_frame()
    return pd.concat(chunks, ignore_index=True)


def clean_pings(pings, accuracy_max_m, study_window=None):
    """Drop pings outside the study window, pings less accurate than
    C{accuracy_max_m}, and exact duplicates.

    Pings without accuracy pass the accuracy filter. The duplicate key
    is (device_id, timestamp, lat, lon); of a duplicate group the most
    accurate copy survives, so the retained set does not depend on
    input order.

    @param pings: canonical ping frame
    @param accuracy_max_m: largest accepted accuracy radius, meters
    @param study_window: (start, end) instants, inclusive, or None

    @returns: (cleaned frame sorted by device and time, report)
    @rtype: (pandas.DataFrame, CleaningReport)
    """
    if not accuracy_max_m > 0:
        raise ValueError('accuracy_max_m must be positive: %r' %
                         (accuracy_max_m, ))

    report = CleaningReport(input_count=len(pings))
    if study_window is not None:
        start, end = study_window
        in_window = (pings['timestamp'] >= start) & \
            (pings['timestamp'] <= end)
        report.dropped_out_of_bounds = int((~in_window).sum())
        pings = pings[in_window]

    accurate = ~(pings['accuracy_m'] > accuracy_max_m)
    report.dropped_inaccurate = int((~accurate).sum())
    pings = pings[accurate]

    pings = pings.sort_values(DEDUPE_KEY + ['accuracy_m'],
                              na_position='last', kind='mergesort')
    unique = ~pings.duplicated(subset=DEDUPE_KEY, keep='first')
    report.dropped_duplicate = int((~unique).sum())
    pings = pings[unique].reset_index(drop=True)

    report.retained_count = len(pings)
    logger.info('cleaning kept %d of %d pings', report.retained_count,
                report.input_count)
    return pings, report


def split_pre_post_fire(pings, ignition):
    """Partition at ignition: before it, and at or after it.

    @returns: (pre_fire, post_fire)
    """
    post = pings['timestamp'] >= ignition
    return pings[~post], pings[post]


def pre_fire_days(study_start, ignition, tz):
    """Local calendar dates lying wholly inside [study_start, ignition).

    @rtype: [datetime.date]
    """
    one = datetime.timedelta(days=1)
    day = timeutil.localDate(study_start, tz)
    last = timeutil.localDate(ignition, tz)
    days = []
    while day <= last:
        if timeutil.localMidnight(day, tz) >= study_start and \
           timeutil.localMidnight(day + one, tz) <= ignition:
            days.append(day)
        day += one
    return days


def filter_frequent_users(pre_fire, pre_fire_days, min_daily_signals,
                          tz='UTC'):
    """Devices with at least C{min_daily_signals} pings on every one of
    C{pre_fire_days}, counted by local calendar date in C{tz}.

    @rtype: set of str
    """
    if not pre_fire_days:
        raise ValueError('pre_fire_days is empty')
    if min_daily_signals < 1:
        raise ValueError('min_daily_signals must be at least 1: %r' %
                         (min_daily_signals, ))

    if len(pre_fire) == 0:
        return set()

    dates, _ = timeutil.wallClock(pre_fire['timestamp'].to_numpy(), tz)
    wanted = np.array(sorted(set(pre_fire_days)), dtype='datetime64[D]')
    keep = np.isin(dates, wanted)
    counts = pd.DataFrame({
        'device_id': pre_fire['device_id'].to_numpy()[keep],
        'date': dates[keep],
    }).groupby(['device_id', 'date']).size()

    days_met = (counts >= min_daily_signals).groupby(level=0).sum()
    residents = set(days_met.index[days_met == len(wanted)])
    logger.info('%d of %d devices are daily-frequent users',
                len(residents), pre_fire['device_id'].nunique())
    return residents


def group_traces(pings):
    """Split a frame into per-device traces in one pass.

    @returns: iterator of DeviceTrace, by device id
    """
    if len(pings) == 0:
        return
    pings = pings.sort_values(['device_id', 'timestamp'], kind='mergesort')
    ids = pings['device_id'].to_numpy()
    ts = pings['timestamp'].to_numpy()
    lats = pings['lat'].to_numpy()
    lons = pings['lon'].to_numpy()
    starts = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]])
    ends = np.r_[starts[1:], len(ids)]
    for s, e in zip(starts, ends):
        yield DeviceTrace(ids[s], ts[s:e], lats[s:e], lons[s:e])
