"""Instants, clock times and local wall-clock arithmetic.

Inside the library an instant is an integer count of seconds since
1970-01-01T00:00:00Z. Files carry ISO-8601 UTC strings.
"""
__all__ = [
    'parseInstant',
    'formatInstant',
    'parseClock',
    'formatClock',
    'wallClock',
    'localDate',
    'localMidnight',
    'checkZone',
    'DAY',
    'HOUR',
]

import datetime
from calendar import timegm
from time import gmtime, strftime

import numpy as np
import pandas as pd

HOUR = 60 * 60
DAY = 24 * HOUR

time_fmt = '%Y-%m-%dT%H:%M:%SZ'


def parseInstant(value):
    """Convert an ISO-8601 string or epoch seconds to an instant.

    Accepts C{2019-10-24T04:27:00Z}, numeric offsets such as
    C{2019-10-23T21:27:00-07:00}, and integer epoch seconds (as int or
    digit string). Naive ISO strings are read as UTC.

    @returns: seconds since the epoch
    @rtype: int

    @raises ValueError: if the value is not a recognisable instant
    """
    if isinstance(value, (int, np.integer)):
        return int(value)

    s = str(value).strip()
    if not s:
        raise ValueError('empty instant')

    if s.lstrip('-').isdigit():
        return int(s)

    if s.endswith('Z') or s.endswith('z'):
        s = s[:-1] + '+00:00'

    try:
        dt = datetime.datetime.fromisoformat(s)
    except ValueError:
        raise ValueError('not an ISO-8601 instant: %r' % (value, ))

    if dt.tzinfo is None:
        return timegm(dt.timetuple())
    return timegm(dt.astimezone(datetime.timezone.utc).timetuple())


def formatInstant(when):
    """Format an instant as C{YYYY-MM-DDTHH:MM:SSZ}; None gives ''."""
    if when is None:
        return ''
    return strftime(time_fmt, gmtime(int(when)))


def parseClock(value):
    """Parse a local clock time C{HH:MM} or C{HH:MM:SS}.

    @returns: seconds after local midnight
    @rtype: int
    """
    parts = str(value).strip().split(':')
    if len(parts) not in (2, 3):
        raise ValueError('not a clock time: %r' % (value, ))
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise ValueError('not a clock time: %r' % (value, ))
    if len(nums) == 2:
        nums.append(0)
    h, m, sec = nums
    if not (0 <= h < 24 and 0 <= m < 60 and 0 <= sec < 60):
        raise ValueError('clock time out of range: %r' % (value, ))
    return h * HOUR + m * 60 + sec


def formatClock(seconds):
    h, rest = divmod(int(seconds), HOUR)
    return '%02d:%02d' % (h, rest // 60)


def checkZone(tz):
    """Raise ValueError unless C{tz} names a time zone pandas knows."""
    try:
        pd.Timestamp(0, unit='s', tz='UTC').tz_convert(tz)
    except Exception as why:
        raise ValueError('unknown time zone %r: %s' % (tz, why))
    return tz


def wallClock(timestamps, tz):
    """Local calendar dates and clock times for an array of instants.

    DST is honoured: each instant is converted with the offset in force
    at that instant.

    @param timestamps: instants
    @type timestamps: array-like of int

    @param tz: IANA time zone name

    @returns: (dates as datetime64[D], seconds after local midnight)
    @rtype: (numpy.ndarray, numpy.ndarray)
    """
    ts = np.asarray(timestamps, dtype=np.int64)
    local = pd.to_datetime(ts, unit='s', utc=True).tz_convert(tz)
    naive = local.tz_localize(None).values
    dates = naive.astype('datetime64[D]')
    seconds = (naive - dates.astype(naive.dtype)) // np.timedelta64(1, 's')
    return dates, seconds.astype(np.int64)


def localDate(when, tz):
    """The local calendar date of one instant."""
    return pd.Timestamp(int(when), unit='s', tz='UTC').tz_convert(tz).date()


def localMidnight(date, tz):
    """The instant of local 00:00 on C{date}.

    Where a zone skips midnight, the first existing local time is used.
    """
    stamp = pd.Timestamp(date).tz_localize(
        tz, ambiguous=True, nonexistent='shift_forward')
    return int(stamp.tz_convert('UTC').timestamp())
