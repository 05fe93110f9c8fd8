# -*- test-case-name: evactrace.test.test_classifier -*-
"""
Evacuation behavior of residents.

A resident is away from home whenever a ping lies farther than the
home buffer radius from their home. Runs of such pings form absence
episodes. The first long enough episode decides the resident's label,
compared against the alert timeline of their zone (homes inside a
zone) or of the whole county (homes near a zone).

Every result carries a reason code naming the rule that produced it:

 - C{no_post_fire_pings}: nothing observed after ignition
 - C{no_qualifying_absence}: never away long enough
 - C{open_absence_insufficient}: still away at the last ping, but not
   yet for long enough to tell
 - C{stops_in_zone}: spent a night inside an evacuation zone
 - C{returned_before_lift}: came home before the alert was lifted
 - C{departure_unobserved}: already away at the first ping
 - C{left_before_ignition}, C{left_after_lift}: left outside the
   event
 - C{left_before_alert}, C{left_after_county_alert},
   C{left_under_warning}, C{left_under_order}: the evacuee labels
"""

__all__ = [
    'AbsenceEpisode',
    'ResidentLabel',
    'ClassificationResult',
    'ClassificationResults',
    'EVACUEE_LABELS',
    'detect_absences',
    'classify_outside_zone',
    'classify_in_zone',
    'classify_resident',
    'classify_all',
]

import concurrent.futures
import enum
import logging

import numpy as np
import pandas as pd

from evactrace import geo
from evactrace import home_inference
from evactrace import ingest
from evactrace import scenario
from evactrace import timeutil

logger = logging.getLogger(__name__)

DEPARTURE_ANCHORS = ('last_inside', 'first_outside')

# Residents per task handed to a worker process
_SHARD_SIZE = 2000


class ResidentLabel(enum.Enum):
    SELF_EVACUEE = 'self_evacuee'
    SHADOW_EVACUEE = 'shadow_evacuee'
    EVACUEE_UNDER_WARNING = 'evacuee_under_warning'
    ORDERED_EVACUEE = 'ordered_evacuee'
    NON_EVACUEE_IN_ZONE = 'non_evacuee_in_zone'
    NON_EVACUEE_OUTSIDE_ZONE = 'non_evacuee_outside_zone'
    UNCATEGORIZED = 'uncategorized'

    @property
    def is_evacuee(self):
        return self in EVACUEE_LABELS


EVACUEE_LABELS = (
    ResidentLabel.SELF_EVACUEE,
    ResidentLabel.SHADOW_EVACUEE,
    ResidentLabel.EVACUEE_UNDER_WARNING,
    ResidentLabel.ORDERED_EVACUEE,
)


class AbsenceEpisode(object):
    """One stretch away from home.

    @ivar t_l: when the resident left
    @ivar t_r: first ping back within the buffer, or None if the
        resident never returned
    @ivar night_stops: where each night of the absence was spent
    @type night_stops: [L{evactrace.geo.GeoPoint}]
    @ivar duration_days: from C{t_l} to C{t_r}, or to the last ping
    @ivar departure_observed: whether a ping at home preceded it
    """

    def __init__(self, t_l, t_r, night_stops, duration_days,
                 departure_observed=True):
        if t_r is not None and t_r < t_l:
            raise ValueError('episode returns before it leaves')
        self.t_l = t_l
        self.t_r = t_r
        self.night_stops = list(night_stops)
        self.duration_days = duration_days
        self.departure_observed = departure_observed

    @property
    def is_open(self):
        return self.t_r is None

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<AbsenceEpisode %s..%s %.2fd %d stops%s>' % (
            timeutil.formatInstant(self.t_l),
            timeutil.formatInstant(self.t_r) or 'open', self.duration_days,
            len(self.night_stops),
            '' if self.departure_observed else ' unobserved')


class ClassificationResult(object):
    """The label of one resident.

    @ivar t_e: departure time, set exactly for the evacuee labels
    @ivar home: the inferred home point, when known
    """

    def __init__(self, device_id, label, placement, reason_code, t_l=None,
                 t_e=None, t_r=None, home=None):
        if (t_e is not None) != label.is_evacuee:
            raise ValueError('t_e must be set exactly for evacuees, '
                             'got %r for %s' % (t_e, label.value))
        self.device_id = device_id
        self.label = label
        self.placement = placement
        self.reason_code = reason_code
        self.t_l = t_l
        self.t_e = t_e
        self.t_r = t_r
        self.home = home

    @property
    def tract_id(self):
        return self.placement.tract_id if self.placement else None

    @property
    def zone_id(self):
        return self.placement.zone_id if self.placement else None

    @property
    def in_zone(self):
        return self.placement is not None and \
            self.placement.location_class is scenario.LocationClass.IN_ZONE

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<ClassificationResult %s %s (%s)>' % (
            self.device_id, self.label.value, self.reason_code)


class ClassificationResults(list):
    """Results in device order.

    @ivar omitted: residents left out because their home is out of
        scope
    """

    def __init__(self, results=(), omitted=0):
        list.__init__(self, results)
        self.omitted = omitted


def _nightStops(timestamps, lats, lons, runs, night_window, cell_size_m):
    """Per run, the densest cell of each night's pings, in night order.

    @returns: run number to list of GeoPoint
    """
    if timestamps.size == 0:
        return {}
    grid = geo.GridSpec.covering(lats, lons, cell_size_m)
    cols, rows, _ = geo.cell_indices(lats, lons, grid)
    nights = night_window.nightKeys(timestamps).astype(np.int64)
    # One group per (run, night)
    keys = runs * 1000000 + (nights - nights.min())
    found, best_cols, best_rows, _, _ = \
        home_inference.most_visited_cells(keys, timestamps, cols, rows)

    stops = {}
    for key, col, row in zip(found, best_cols, best_rows):
        stops.setdefault(int(key) // 1000000, []).append(
            geo.cell_centroid(geo.CellIndex(int(col), int(row)), grid))
    return stops


def detect_absences(trace, home, D_km, night_window,
                    departure_anchor='last_inside', cell_size_m=20.0):
    """Split a trace into episodes away from home.

    An episode is a maximal run of pings beyond C{D_km} of the home. It
    is left at the last ping within the buffer before the run (or at
    the run's first ping with C{departure_anchor='first_outside'}) and
    returned from at the first ping back within the buffer.

    @type trace: L{evactrace.ingest.DeviceTrace}
    @type home: L{evactrace.home_inference.HomeLocation}
    @type night_window: L{evactrace.home_inference.NightWindow}

    @rtype: [AbsenceEpisode]
    """
    if departure_anchor not in DEPARTURE_ANCHORS:
        raise ValueError('unknown departure anchor %r' % (departure_anchor, ))
    ts = trace.timestamps
    n = ts.size
    if n == 0:
        return []

    away = geo.haversine_km_many(home.point.lat, home.point.lon, trace.lats,
                                 trace.lons) > D_km
    if not away.any():
        return []

    edges = np.diff(np.r_[0, away.astype(np.int8), 0])
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)

    run_of = np.full(n, -1, dtype=np.int64)
    for num, (s, e) in enumerate(zip(starts, ends)):
        run_of[s:e] = num
    night = away & night_window.mask(ts)
    stops = _nightStops(ts[night], trace.lats[night], trace.lons[night],
                        run_of[night], night_window, cell_size_m)

    last_ping = int(ts[-1])
    episodes = []
    for num, (s, e) in enumerate(zip(starts, ends)):
        observed = s > 0
        if observed and departure_anchor == 'last_inside':
            t_l = int(ts[s - 1])
        else:
            t_l = int(ts[s])
        t_r = int(ts[e]) if e < n else None
        end = t_r if t_r is not None else last_ping
        episodes.append(
            AbsenceEpisode(t_l, t_r, stops.get(num, []),
                           (end - t_l) / float(timeutil.DAY), observed))
    return episodes


def _stopsInZones(episode, s):
    if not episode.night_stops:
        return False
    lats = np.array([p.lat for p in episode.night_stops])
    lons = np.array([p.lon for p in episode.night_stops])
    for zone in s.zones:
        if zone.geometry.contains_many(lats, lons).any():
            return True
    return False


def _firstQualifying(episodes, min_days):
    for episode in episodes:
        if episode.duration_days >= min_days:
            return episode
    return None


def _result(placement, label, reason, episode=None, home=None):
    t_l = t_r = t_e = None
    if episode is not None:
        t_l, t_r = episode.t_l, episode.t_r
        if label.is_evacuee:
            t_e = t_l
    return ClassificationResult(placement.device_id, label, placement, reason,
                                t_l, t_e, t_r, home)


def _undecided(episodes, min_days, placement, stayed, home):
    last = episodes[-1] if episodes else None
    if last is not None and last.is_open and last.duration_days < min_days:
        return _result(placement, ResidentLabel.UNCATEGORIZED,
                       'open_absence_insufficient', last, home)
    return _result(placement, stayed, 'no_qualifying_absence', home=home)


def classify_outside_zone(episodes, placement, s, home=None):
    """Label a resident whose home is near, but outside, the zones.

    @type placement: L{evactrace.scenario.HomePlacement}
    @type s: L{evactrace.scenario.Scenario}
    @rtype: ClassificationResult
    """
    if placement.location_class is not scenario.LocationClass.NEAR_ZONE:
        raise geo.ContractError('%s is not near a zone' %
                                (placement.device_id, ))
    stayed = ResidentLabel.NON_EVACUEE_OUTSIDE_ZONE
    episode = _firstQualifying(episodes, s.outside_absence_days)
    if episode is None:
        return _undecided(episodes, s.outside_absence_days, placement, stayed,
                          home)

    if _stopsInZones(episode, s):
        return _result(placement, stayed, 'stops_in_zone', episode, home)

    lift = s.zone(placement.zone_id).lifted
    if episode.t_r is not None and episode.t_r < lift:
        return _result(placement, ResidentLabel.UNCATEGORIZED,
                       'returned_before_lift', episode, home)

    if not episode.departure_observed:
        return _result(placement, ResidentLabel.UNCATEGORIZED,
                       'departure_unobserved', episode, home)

    if episode.t_l < scenario.first_county_alert(s):
        if episode.t_l < s.ignition:
            return _result(placement, ResidentLabel.UNCATEGORIZED,
                           'left_before_ignition', episode, home)
        return _result(placement, ResidentLabel.SELF_EVACUEE,
                       'left_before_alert', episode, home)

    return _result(placement, ResidentLabel.SHADOW_EVACUEE,
                   'left_after_county_alert', episode, home)


def classify_in_zone(episodes, placement, s, home=None):
    """Label a resident whose home lies inside an evacuation zone.

    @type placement: L{evactrace.scenario.HomePlacement}
    @type s: L{evactrace.scenario.Scenario}
    @rtype: ClassificationResult
    """
    if placement.location_class is not scenario.LocationClass.IN_ZONE:
        raise geo.ContractError('%s is not in a zone' %
                                (placement.device_id, ))
    stayed = ResidentLabel.NON_EVACUEE_IN_ZONE
    episode = _firstQualifying(episodes, s.in_zone_absence_days)
    if episode is None:
        return _undecided(episodes, s.in_zone_absence_days, placement, stayed,
                          home)

    if _stopsInZones(episode, s):
        return _result(placement, stayed, 'stops_in_zone', episode, home)

    zone = s.zone(placement.zone_id)
    if episode.t_r is not None and episode.t_r < zone.lifted:
        return _result(placement, ResidentLabel.UNCATEGORIZED,
                       'returned_before_lift', episode, home)

    if not episode.departure_observed:
        return _result(placement, ResidentLabel.UNCATEGORIZED,
                       'departure_unobserved', episode, home)

    t_l = episode.t_l
    if t_l < scenario.zone_first_alert(zone):
        if t_l < s.ignition:
            return _result(placement, ResidentLabel.UNCATEGORIZED,
                           'left_before_ignition', episode, home)
        return _result(placement, ResidentLabel.SELF_EVACUEE,
                       'left_before_alert', episode, home)

    if t_l >= zone.lifted:
        return _result(placement, ResidentLabel.UNCATEGORIZED,
                       'left_after_lift', episode, home)

    if zone.order_issued is not None and t_l >= zone.order_issued:
        return _result(placement, ResidentLabel.ORDERED_EVACUEE,
                       'left_under_order', episode, home)

    return _result(placement, ResidentLabel.EVACUEE_UNDER_WARNING,
                   'left_under_warning', episode, home)


def classify_resident(trace, home, placement, s, night_window,
                      departure_anchor='last_inside', cell_size_m=20.0,
                      context=None):
    """Label one in-scope resident from their post-fire trace.

    @param context: pre-fire pings from the last one at home onward, so
        a departure just before ignition is seen as such
    @type context: L{evactrace.ingest.DeviceTrace}
    """
    if trace is None or len(trace) == 0:
        return _result(placement, ResidentLabel.UNCATEGORIZED,
                       'no_post_fire_pings', home=home.point)

    if context is not None and len(context):
        trace = ingest.DeviceTrace(
            trace.device_id, np.r_[context.timestamps, trace.timestamps],
            np.r_[context.lats, trace.lats], np.r_[context.lons, trace.lons])

    episodes = detect_absences(trace, home, s.home_buffer_d_km, night_window,
                               departure_anchor, cell_size_m)
    if placement.location_class is scenario.LocationClass.IN_ZONE:
        return classify_in_zone(episodes, placement, s, home.point)
    return classify_outside_zone(episodes, placement, s, home.point)


def _classifyShard(jobs, s, night_window, departure_anchor, cell_size_m):
    return [
        classify_resident(trace, home, placement, s, night_window,
                          departure_anchor, cell_size_m, context)
        for home, placement, trace, context in jobs
    ]


def _departureContext(pre_fire, homes, D_km):
    """Pre-fire pings of each device from its last ping at home on."""
    if pre_fire is None or len(pre_fire) == 0:
        return {}
    frame = pre_fire[pre_fire['device_id'].isin(homes.keys())]
    if len(frame) == 0:
        return {}
    frame = frame.sort_values(['device_id', 'timestamp'], kind='mergesort')
    ids = frame['device_id'].to_numpy()
    home_lat = np.array([homes[i].point.lat for i in ids])
    home_lon = np.array([homes[i].point.lon for i in ids])
    at_home = geo.haversine_km_many(home_lat, home_lon,
                                    frame['lat'].to_numpy(),
                                    frame['lon'].to_numpy()) <= D_km
    pos = pd.Series(np.arange(len(frame)), index=frame.index)
    last_home = pos.where(at_home).groupby(ids).transform('max')
    frame = frame[(pos >= last_home).to_numpy()]
    return dict((t.device_id, t) for t in ingest.group_traces(frame))


def classify_all(residents, homes, placements, post_fire, s, night_window,
                 departure_anchor='last_inside', cell_size_m=20.0,
                 pre_fire=None, workers=1):
    """Label every in-scope resident that has a home.

    @param residents: device ids
    @param homes: device_id to HomeLocation
    @param placements: device_id to HomePlacement
    @param post_fire: canonical post-fire ping frame
    @param pre_fire: canonical pre-fire ping frame, for departures that
        straddle ignition; optional
    @param workers: processes to spread residents over

    @rtype: ClassificationResults
    """
    in_scope = []
    omitted = 0
    for device_id in sorted(set(residents)):
        if device_id not in homes:
            continue
        placement = placements[device_id]
        if placement.in_scope:
            in_scope.append(device_id)
        else:
            omitted += 1
    if omitted:
        logger.info('%d residents live out of scope and are not classified',
                    omitted)

    wanted = set(in_scope)
    frame = post_fire[post_fire['device_id'].isin(wanted)]
    traces = dict((t.device_id, t) for t in ingest.group_traces(frame))
    contexts = _departureContext(pre_fire, dict(
        (d, homes[d]) for d in in_scope), s.home_buffer_d_km)

    jobs = [(homes[d], placements[d], traces.get(d), contexts.get(d))
            for d in in_scope]
    shards = [jobs[i:i + _SHARD_SIZE]
              for i in range(0, len(jobs), _SHARD_SIZE)]

    results = []
    if workers > 1 and len(shards) > 1:
        logger.info('Classifying %d residents with %d workers', len(jobs),
                    workers)
        with concurrent.futures.ProcessPoolExecutor(workers) as pool:
            futures = [
                pool.submit(_classifyShard, shard, s, night_window,
                            departure_anchor, cell_size_m) for shard in shards
            ]
            for future in futures:
                results.extend(future.result())
    else:
        for shard in shards:
            results.extend(
                _classifyShard(shard, s, night_window, departure_anchor,
                               cell_size_m))

    counts = {}
    for r in results:
        counts[r.label] = counts.get(r.label, 0) + 1
    logger.info('Classified %d residents: %s', len(results), ', '.join(
        '%s=%d' % (label.value, counts.get(label, 0))
        for label in ResidentLabel))
    return ClassificationResults(results, omitted)
