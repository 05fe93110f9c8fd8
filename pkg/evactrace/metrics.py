# -*- test-case-name: evactrace.test.test_metrics -*-
"""
Aggregates over classification results: compliance rates per area,
cumulative response curves, label proportions, and the regression of
inferred residents on census population that measures sampling bias.

Rates are exact C{fractions.Fraction} values. A rate over an empty
denominator is C{L{UNDEFINED}}, never a number.
"""

__all__ = [
    'UNDEFINED',
    'ALL',
    'ALL_ZONES',
    'Universe',
    'ComplianceRecord',
    'ResponseCurve',
    'GroupProportions',
    'RegressionSummary',
    'DegenerateFitError',
    'EmptyUniverseError',
    'default_period',
    'compliance_rate',
    'compliance_table',
    'response_curves',
    'curve_boundaries',
    'group_proportions',
    'tract_compositions',
    'sampling_bias_regression',
    'sampling_rates',
    'overall_sampling_rate',
    'homes_per_tract',
    'signal_counts_by_tract',
    'low_sample_tracts',
]

import datetime
import enum
import logging
import sys
from fractions import Fraction

import numpy as np
from scipy import special

from evactrace import timeutil
from evactrace.classifier import EVACUEE_LABELS, ResidentLabel
from evactrace.evutil import Symbol

logger = logging.getLogger(__name__)

UNDEFINED = Symbol('undefined rate')

# Group name of the all-evacuees curve
ALL = 'ALL'

# Area id of the record covering every zone at once
ALL_ZONES = 'ALL_ZONES'


class DegenerateFitError(ValueError):
    """Too few points, or a constant regressor, for a line fit."""


class EmptyUniverseError(ValueError):
    """No resident falls in the requested universe."""


class Universe(enum.Enum):
    ALL_IN_SCOPE = 'all_in_scope'
    IN_ZONE_ONLY = 'in_zone_only'


class ComplianceRecord(object):
    """Departures over residents for one area and period.

    @ivar period: (start, end) instants, start inclusive
    @ivar M: evacuees departing in the period
    @ivar N: residents of the area
    @ivar alpha: C{M / N} as a Fraction, or C{UNDEFINED} when N is 0
    """

    def __init__(self, area_id, period, M, N):
        if M > N:
            raise ValueError('more departures than residents in %r' %
                             (area_id, ))
        self.area_id = area_id
        self.period = period
        self.M = M
        self.N = N
        self.alpha = Fraction(M, N) if N else UNDEFINED

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<ComplianceRecord %s %d/%d>' % (self.area_id, self.M, self.N)


class ResponseCurve(object):
    """Cumulative departures of one group.

    @ivar group: a ResidentLabel, or C{ALL}
    @ivar bins: bin boundary instants; C{cumulative[k]} counts
        departures before C{bins[k]}
    @ivar overflow: departures at or after the last boundary, counted
        in the final bin
    """

    def __init__(self, group, bins, cumulative, overflow=0):
        self.group = group
        self.bins = list(bins)
        self.cumulative = [int(c) for c in cumulative]
        self.overflow = overflow

    @property
    def name(self):
        return self.group if self.group == ALL else self.group.value

    @property
    def total(self):
        return self.cumulative[-1] if self.cumulative else 0

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<ResponseCurve %s %r>' % (self.name, self.cumulative)


class GroupProportions(object):
    """Label counts and shares over a universe of residents.

    @ivar counts: ResidentLabel to count, every label present
    @ivar shares: ResidentLabel to Fraction, summing to 1
    """

    def __init__(self, universe, counts):
        self.universe = universe
        self.counts = dict((label, counts.get(label, 0))
                           for label in ResidentLabel)
        self.total = sum(self.counts.values())
        if not self.total:
            raise EmptyUniverseError('no residents in universe %s' %
                                     (universe.value, ))
        self.shares = dict((label, Fraction(n, self.total))
                           for label, n in self.counts.items())

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)


class RegressionSummary(object):
    """Ordinary least squares fit of y on x."""

    def __init__(self, slope, intercept, r_squared, p_value, n_points,
                 slope_stderr):
        self.slope = slope
        self.intercept = intercept
        self.r_squared = r_squared
        self.p_value = p_value
        self.n_points = n_points
        self.slope_stderr = slope_stderr

    def toPairs(self):
        return [
            ('n_points', self.n_points),
            ('slope', repr(self.slope)),
            ('intercept', repr(self.intercept)),
            ('r_squared', repr(self.r_squared)),
            ('p_value', repr(self.p_value)),
            ('slope_stderr', repr(self.slope_stderr)),
        ]

    def __repr__(self):
        return '<RegressionSummary slope=%g r2=%g p=%g n=%d>' % (
            self.slope, self.r_squared, self.p_value, self.n_points)


def default_period(ignition, horizon_days=12):
    return (ignition, ignition + horizon_days * timeutil.DAY)


def _areaOf(result, area_kind):
    if area_kind == 'tract':
        return result.tract_id
    if area_kind == 'zone':
        return result.zone_id if result.in_zone else None
    raise ValueError('unknown area kind %r' % (area_kind, ))


def _inArea(result, area_id, area_kind):
    if area_id == ALL_ZONES:
        return result.in_zone
    return _areaOf(result, area_kind) == area_id


def compliance_rate(results, area_id, period, area_kind='tract',
                    categorized_only=False):
    """Share of an area's residents who left during C{period}.

    @param area_id: tract or zone id, or C{ALL_ZONES} for every
        in-zone resident
    @param period: (start, end) instants, half-open
    @param categorized_only: leave uncategorized residents out of the
        denominator

    @rtype: ComplianceRecord
    """
    start, end = period
    M = N = 0
    for r in results:
        if not _inArea(r, area_id, area_kind):
            continue
        if categorized_only and r.label is ResidentLabel.UNCATEGORIZED:
            continue
        N += 1
        if r.t_e is not None and start <= r.t_e < end:
            M += 1
    return ComplianceRecord(area_id, period, M, N)


def compliance_table(results, s, period, area_kind='tract',
                     categorized_only=False):
    """Compliance for every tract (or zone) of the scenario, in
    declaration order, followed by the C{ALL_ZONES} record."""
    if area_kind == 'tract':
        area_ids = [t.tract_id for t in s.tracts]
    else:
        area_ids = [z.zone_id for z in s.zones]
    results = list(results)
    records = [
        compliance_rate(results, area_id, period, area_kind, categorized_only)
        for area_id in area_ids + [ALL_ZONES]
    ]
    undefined = sum(1 for r in records if r.alpha is UNDEFINED)
    if undefined:
        logger.info('%d areas have no residents; their rate is undefined',
                    undefined)
    return records


def curve_boundaries(ignition, horizon_days=12, bins='ignition', tz='UTC'):
    """Boundary instants k = 0..horizon_days of the daily bins.

    C{ignition} bins start at the ignition instant; C{local_day} bins
    start at local midnights from the ignition date on.
    """
    if bins == 'ignition':
        return [ignition + k * timeutil.DAY for k in range(horizon_days + 1)]
    if bins == 'local_day':
        first = timeutil.localDate(ignition, tz)
        return [
            timeutil.localMidnight(first + datetime.timedelta(days=k), tz)
            for k in range(horizon_days + 1)
        ]
    raise ValueError('unknown bins %r' % (bins, ))


def response_curves(results, ignition, horizon_days=12, bins='ignition',
                    tz='UTC'):
    """Cumulative departure curves for each evacuee label and for all.

    @returns: curves for the four evacuee labels, then C{ALL}
    @rtype: [ResponseCurve]

    @raises ValueError: if a departure precedes ignition
    """
    boundaries = np.array(curve_boundaries(ignition, horizon_days, bins, tz),
                          dtype=np.int64)
    curves = []
    total = np.zeros(len(boundaries), dtype=np.int64)
    total_overflow = 0
    for label in EVACUEE_LABELS:
        times = np.array([r.t_e for r in results if r.label is label],
                         dtype=np.int64)
        if times.size and times.min() < ignition:
            raise ValueError('departure before ignition in %s' %
                             (label.value, ))
        cumulative = np.searchsorted(np.sort(times), boundaries, side='left')
        overflow = int(times.size - cumulative[-1])
        if overflow:
            logger.warning('%d %s departures fall after the %d-day horizon',
                           overflow, label.value, horizon_days)
            cumulative[-1] = times.size
        curves.append(
            ResponseCurve(label, boundaries.tolist(), cumulative, overflow))
        total += cumulative
        total_overflow += overflow
    curves.append(ResponseCurve(ALL, boundaries.tolist(), total,
                                total_overflow))
    return curves


def _universeMembers(results, universe):
    if universe is Universe.IN_ZONE_ONLY:
        return [r for r in results if r.in_zone]
    return list(results)


def group_proportions(results, universe=Universe.ALL_IN_SCOPE):
    """Counts and shares of each label.

    @raises EmptyUniverseError: if no result falls in the universe
    """
    counts = {}
    for r in _universeMembers(results, universe):
        counts[r.label] = counts.get(r.label, 0) + 1
    return GroupProportions(universe, counts)


def tract_compositions(results, universe=Universe.ALL_IN_SCOPE):
    """Label proportions per home tract, for tracts with residents.

    @returns: tract_id to GroupProportions
    """
    by_tract = {}
    for r in _universeMembers(results, universe):
        if r.tract_id is not None:
            by_tract.setdefault(r.tract_id, []).append(r)
    return dict((tract_id, group_proportions(members, universe))
                for tract_id, members in sorted(by_tract.items()))


def sampling_bias_regression(points):
    """Fit inferred residents against population by least squares.

    Sums are taken exactly; the two-sided slope p-value comes from the
    t distribution with n - 2 degrees of freedom, through the
    regularized incomplete beta function.

    @param points: (inferred, population) pairs, one per tract
    @rtype: RegressionSummary

    @raises DegenerateFitError: with fewer than 3 points or a constant
        population
    """
    points = [(Fraction(y), Fraction(x)) for y, x in points]
    n = len(points)
    if n < 3:
        raise DegenerateFitError('need at least 3 points, got %d' % (n, ))

    mean_x = sum(x for _, x in points) / n
    mean_y = sum(y for y, _ in points) / n
    sxx = sum((x - mean_x)**2 for _, x in points)
    if sxx == 0:
        raise DegenerateFitError('population is constant across tracts')
    sxy = sum((x - mean_x) * (y - mean_y) for y, x in points)
    syy = sum((y - mean_y)**2 for y, _ in points)

    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_res = syy - sxy * sxy / sxx
    df = n - 2

    r_squared = Fraction(1) if syy == 0 else 1 - ss_res / syy
    stderr = (float(ss_res / df / sxx))**0.5

    if ss_res == 0:
        p_value = 1.0 if slope == 0 else sys.float_info.min
    else:
        # x = df / (df + t^2), with t^2 = slope^2 * df * sxx / ss_res
        t2 = slope * slope * df * sxx / ss_res
        p_value = float(special.betainc(df / 2.0, 0.5,
                                        float(df / (df + t2))))
        p_value = max(p_value, sys.float_info.min)

    return RegressionSummary(float(slope), float(intercept),
                             float(r_squared), p_value, n, stderr)


def sampling_rates(pairs):
    """Inferred residents over population, per tract.

    @param pairs: tract_id to (inferred, population)
    @returns: tract_id to Fraction, or C{UNDEFINED} for empty tracts
    """
    return dict((tract_id, Fraction(inferred, population)
                 if population else UNDEFINED)
                for tract_id, (inferred, population) in pairs.items())


def overall_sampling_rate(pairs):
    """Total inferred over total population."""
    inferred = sum(i for i, _ in pairs.values())
    population = sum(p for _, p in pairs.values())
    return Fraction(inferred, population) if population else UNDEFINED


def homes_per_tract(placements, s):
    """Inferred homes in each tract of the scenario, zeros included."""
    counts = dict((t.tract_id, 0) for t in s.tracts)
    for p in placements.values():
        if p.tract_id is not None:
            counts[p.tract_id] = counts.get(p.tract_id, 0) + 1
    return counts


def signal_counts_by_tract(pings, placements):
    """Total pings of residents, grouped by their home tract.

    @param pings: canonical ping frame
    @param placements: device_id to HomePlacement
    """
    tract_of = dict((d, p.tract_id) for d, p in placements.items()
                    if p.tract_id is not None)
    if not tract_of or len(pings) == 0:
        return {}
    tracts = pings['device_id'].map(tract_of)
    counts = tracts.dropna().value_counts()
    return dict((t, int(n)) for t, n in sorted(counts.items()))


def low_sample_tracts(counts, min_homes=20):
    """Tracts whose inferred home count is below C{min_homes}."""
    return set(t for t, n in counts.items() if n < min_homes)

