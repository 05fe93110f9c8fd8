"""Typed run settings read from C{key = value} config files.

Every threshold of the pipeline lives here with its default. A config
file names only what it changes; command-line C{--set key=value}
overrides are applied on top. Paths are resolved against the directory
holding the config file.
"""

__all__ = ['Config', 'ConfigError', 'loadConfig', 'parseOverrides']

import logging
import os

from evactrace import geo
from evactrace import kvform
from evactrace import timeutil

logger = logging.getLogger(__name__)

DEPARTURE_ANCHORS = ('last_inside', 'first_outside')
CURVE_BINS = ('ignition', 'local_day')
COMPLIANCE_AREAS = ('tract', 'zone')

_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


class ConfigError(ValueError):
    """A setting is unknown, unparsable or inconsistent."""


def _bool(value):
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ValueError('not a boolean: %r' % (value, ))


def _positiveFloat(value):
    f = float(value)
    if not f > 0:
        raise ValueError('must be positive: %r' % (value, ))
    return f


def _positiveInt(value):
    i = int(value)
    if i < 1:
        raise ValueError('must be at least 1: %r' % (value, ))
    return i


def _nonNegativeFloat(value):
    f = float(value)
    if f < 0:
        raise ValueError('must not be negative: %r' % (value, ))
    return f


def _choice(*allowed):
    def parse(value):
        v = value.strip()
        if v not in allowed:
            raise ValueError('expected one of %s, got %r' %
                             (', '.join(allowed), value))
        return v

    return parse


def _delimiter(value):
    if value == '\\t' or value.lower() == 'tab':
        return '\t'
    if len(value) != 1:
        raise ValueError('delimiter must be one character: %r' % (value, ))
    return value


def _text(value):
    return value


def _instant(value):
    return timeutil.parseInstant(value)


# (key, parser, default, formatter)
_SETTINGS = [
    ('ignition', _instant, None, timeutil.formatInstant),
    ('tz', timeutil.checkZone, 'UTC', str),
    ('study_start', _instant, None, timeutil.formatInstant),
    ('study_end', _instant, None, timeutil.formatInstant),
    ('accuracy_max_m', _positiveFloat, 250.0, repr),
    ('min_daily_signals', _positiveInt, 20, str),
    ('cell_size_m', _positiveFloat, 20.0, repr),
    ('night_start', timeutil.parseClock, 22 * timeutil.HOUR,
     timeutil.formatClock),
    ('night_end', timeutil.parseClock, 6 * timeutil.HOUR,
     timeutil.formatClock),
    ('home_buffer_d_km', _nonNegativeFloat, round(geo.FIVE_MILES_KM, 4),
     repr),
    ('shadow_buffer_km', _nonNegativeFloat, round(geo.FIVE_MILES_KM, 4),
     repr),
    ('outside_absence_days', _nonNegativeFloat, 2.0, repr),
    ('in_zone_absence_days', _nonNegativeFloat, 1.0, repr),
    ('departure_anchor', _choice(*DEPARTURE_ANCHORS), 'last_inside', str),
    ('categorized_only', _bool, False, lambda b: 'true' if b else 'false'),
    ('horizon_days', _positiveInt, 12, str),
    ('curve_bins', _choice(*CURVE_BINS), 'ignition', str),
    ('compliance_area', _choice(*COMPLIANCE_AREAS), 'tract', str),
    ('min_tract_homes', _positiveInt, 20, str),
    ('delimiter', _delimiter, ',', lambda d: '\\t' if d == '\t' else d),
    ('col_device_id', _text, 'device_id', str),
    ('col_timestamp', _text, 'timestamp', str),
    ('col_lat', _text, 'lat', str),
    ('col_lon', _text, 'lon', str),
    ('col_accuracy', _text, 'accuracy_m', str),
    ('pings', _text, None, str),
    ('zones', _text, None, str),
    ('tracts', _text, None, str),
    ('truth', _text, None, str),
    ('workers', _positiveInt, None, str),
    ('error_log', _text, None, str),
]

PATH_KEYS = ('pings', 'zones', 'tracts', 'truth', 'error_log')

_BY_KEY = dict((s[0], s) for s in _SETTINGS)


class Config(object):
    """Effective settings for one run.

    Attributes carry the setting names; clock settings are seconds
    after local midnight and instants are epoch seconds.

    @ivar base_dir: directory that relative paths are resolved against
    """

    def __init__(self, base_dir='.', **settings):
        self.base_dir = base_dir
        for key, _, default, _ in _SETTINGS:
            setattr(self, key, default)
        for key, value in settings.items():
            if key not in _BY_KEY:
                raise ConfigError('unknown setting %r' % (key, ))
            setattr(self, key, value)

    @classmethod
    def fromPairs(cls, pairs, base_dir='.', strict=False):
        """Build from C{(key, text)} pairs, later pairs winning."""
        config = cls(base_dir=base_dir)
        config.update(pairs, strict=strict)
        return config

    def update(self, pairs, strict=False):
        problems = []
        for key, text in pairs:
            setting = _BY_KEY.get(key)
            if setting is None:
                msg = 'unknown setting %r' % (key, )
                if strict:
                    problems.append(msg)
                else:
                    logger.warning('Ignoring %s', msg)
                continue
            parse = setting[1]
            if text == '':
                setattr(self, key, setting[2])
                continue
            try:
                setattr(self, key, parse(text))
            except ValueError as why:
                problems.append('%s: %s' % (key, why))

        if problems:
            raise ConfigError('; '.join(problems))
        self.check()

    def check(self):
        """Raise C{L{ConfigError}} on settings that contradict each
        other."""
        if self.study_start is not None and self.study_end is not None \
           and self.study_start > self.study_end:
            raise ConfigError('study_start is after study_end')
        if self.ignition is not None:
            if self.study_start is not None and \
               self.ignition < self.study_start:
                raise ConfigError('ignition precedes study_start')
            if self.study_end is not None and self.ignition > self.study_end:
                raise ConfigError('ignition follows study_end')
        if self.night_start == self.night_end:
            raise ConfigError('night window is empty')

    def require(self, *keys):
        """Raise C{L{ConfigError}} naming every unset key in C{keys}."""
        missing = [k for k in keys if getattr(self, k) is None]
        if missing:
            raise ConfigError('missing required setting(s): %s' %
                              ', '.join(missing))

    def path(self, key):
        """The path setting C{key} resolved against C{base_dir}, or None."""
        value = getattr(self, key)
        if value is None:
            return None
        return os.path.join(self.base_dir, os.path.expanduser(value))

    @property
    def study_window(self):
        return (self.study_start, self.study_end)

    def toPairs(self):
        pairs = []
        for key, _, _, fmt in _SETTINGS:
            value = getattr(self, key)
            if value is not None:
                pairs.append((key, fmt(value)))
        return pairs

    def toKV(self):
        """Serialise every set value; loading the result gives an equal
        config."""
        return kvform.seqToKV(self.toPairs())

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<Config %s>' % ' '.join('%s=%s' % p for p in self.toPairs())


def parseOverrides(items):
    """Turn C{key=value} strings from the command line into pairs."""
    pairs = []
    for item in items or ():
        if '=' not in item:
            raise ConfigError('override %r is not key=value' % (item, ))
        key, value = item.split('=', 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def loadConfig(path=None, overrides=(), strict=False):
    """Read a config file and apply overrides.

    @param path: config file, or None for defaults only
    @param overrides: C{(key, text)} pairs applied after the file
    @param strict: unknown keys and malformed lines raise

    @rtype: Config

    @raises ConfigError: on an invalid setting
    @raises OSError: if the file cannot be read
    """
    if path is None:
        config = Config()
    else:
        with open(path, 'rb') as f:
            data = f.read()
        try:
            pairs = kvform.kvToSeq(data, strict=strict)
        except kvform.KVFormError as why:
            raise ConfigError('%s: %s' % (path, why))
        config = Config.fromPairs(
            pairs, base_dir=os.path.dirname(os.path.abspath(path)),
            strict=strict)
        logger.info('Loaded config from %s', path)

    if overrides:
        config.update(overrides, strict=strict)
    return config
