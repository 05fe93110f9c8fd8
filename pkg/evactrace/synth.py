# -*- test-case-name: evactrace.test.test_synth -*-
"""
Synthetic scenarios and ping streams whose homes, behaviors and
departure times are known, for checking the pipeline end to end.

Every agent is scripted: where it lives, which label it should earn,
and when it leaves and comes back. Its pings are Poisson arrivals over
the study window, placed according to the script and blurred by
isotropic Gaussian noise. Each pre-fire night gets at least one ping,
so agents qualify as residents unless their ping rate is very low.

Generation is deterministic for a seed: every agent draws from its own
child of C{numpy.random.SeedSequence(seed)}.
"""

__all__ = [
    'Template',
    'AgentSpec',
    'SyntheticDataset',
    'GenerationError',
    'DEFAULT_IGNITION',
    'DEFAULT_TZ',
    'DEFAULT_MIX',
    'study_window_for',
    'largest_remainder',
    'parseMix',
    'checkMix',
    'generate_scenario',
    'generate_agent_trace',
    'generate_dataset',
    'write_bundle',
]

import datetime
import enum
import json
import logging
import math

import numpy as np
import pandas as pd

from evactrace import config as config_mod
from evactrace import formats
from evactrace import geo
from evactrace import ingest
from evactrace import timeutil
from evactrace.classifier import ResidentLabel
from evactrace.home_inference import NightWindow
from evactrace.scenario import (EvacZone, LocationClass, Scenario, Tract,
                                first_county_alert, placement_of,
                                tracts_geojson, zone_first_alert,
                                zones_geojson)
from evactrace.store.filestore import OutputStore

logger = logging.getLogger(__name__)

HOUR = timeutil.HOUR
DAY = timeutil.DAY

DEFAULT_IGNITION = timeutil.parseInstant('2019-10-24T04:27:00Z')
DEFAULT_TZ = 'America/Los_Angeles'
PRE_FIRE_DAYS = 8
POST_FIRE_DAYS = 14

CENTER = geo.GeoPoint(38.60, -122.85)
ZONE_KM = 12.0
TRACT_GRID = 3

# Homes keep this far from any zone edge, so noise cannot move them
# across it
EDGE_MARGIN_KM = 0.5

DEFAULT_MIX = {
    ResidentLabel.SELF_EVACUEE: 0.15,
    ResidentLabel.SHADOW_EVACUEE: 0.15,
    ResidentLabel.EVACUEE_UNDER_WARNING: 0.15,
    ResidentLabel.ORDERED_EVACUEE: 0.15,
    ResidentLabel.NON_EVACUEE_IN_ZONE: 0.15,
    ResidentLabel.NON_EVACUEE_OUTSIDE_ZONE: 0.15,
    ResidentLabel.UNCATEGORIZED: 0.10,
}

_MAX_TRIES = 1000

_NON_EVACUEES = (ResidentLabel.NON_EVACUEE_IN_ZONE,
                 ResidentLabel.NON_EVACUEE_OUTSIDE_ZONE)


class GenerationError(ValueError):
    """A script cannot be realised, or its trace breaks the script."""


class Template(enum.Enum):
    BASIC = 'basic'
    ORDER_FIRST = 'order_first'
    OVERLAPPING = 'overlapping'


class AgentSpec(object):
    """The script of one synthetic resident.

    For evacuees C{departure} and C{destination} are required and
    C{return_time} may be None. Non-evacuees with a C{destination} make
    a trip that spends its nights inside an evacuation zone.

    @ivar silent_after_ignition: emit no ping from ignition on
    """

    def __init__(self, agent_id, true_home, behavior, departure=None,
                 destination=None, return_time=None, ping_rate_per_hour=4.0,
                 position_noise_m=30.0, seed=0, silent_after_ignition=False):
        self.agent_id = agent_id
        self.true_home = true_home
        self.behavior = behavior
        self.departure = departure
        self.destination = destination
        self.return_time = return_time
        self.ping_rate_per_hour = ping_rate_per_hour
        self.position_noise_m = position_noise_m
        self.seed = seed
        self.silent_after_ignition = silent_after_ignition

    def check(self, s):
        """Raise C{L{GenerationError}} unless the script can be
        realised in scenario C{s}."""
        if not self.ping_rate_per_hour > 0:
            raise GenerationError('%s: ping rate must be positive' %
                                  (self.agent_id, ))
        if self.position_noise_m < 0:
            raise GenerationError('%s: negative noise' % (self.agent_id, ))
        if self.behavior.is_evacuee and (self.departure is None or
                                         self.destination is None):
            raise GenerationError('%s: evacuee script needs departure and '
                                  'destination' % (self.agent_id, ))
        if (self.departure is None) != (self.destination is None):
            raise GenerationError('%s: departure and destination go '
                                  'together' % (self.agent_id, ))
        if self.return_time is not None and (
                self.departure is None or self.return_time <= self.departure):
            raise GenerationError('%s: return must follow departure' %
                                  (self.agent_id, ))
        if self.destination is not None:
            d = geo.haversine_km(self.true_home, self.destination)
            if d <= s.home_buffer_d_km:
                raise GenerationError(
                    '%s: destination %.2f km from home is within the '
                    '%.2f km home buffer' %
                    (self.agent_id, d, s.home_buffer_d_km))
            if self.behavior in _NON_EVACUEES and not any(
                    geo.contains(z.geometry, self.destination)
                    for z in s.zones):
                raise GenerationError('%s: non-evacuee trip must stop in a '
                                      'zone' % (self.agent_id, ))

    def __repr__(self):
        return '<AgentSpec %s %s>' % (self.agent_id, self.behavior.value)


class SyntheticDataset(object):
    """Pings with their ground truth.

    @ivar pings: canonical ping frame, by agent and time
    @ivar truth: agent_id to L{evactrace.formats.TruthRecord}
    @ivar specs: the scripts, in agent order
    """

    def __init__(self, pings, truth, specs, scenario, study_window):
        self.pings = pings
        self.truth = truth
        self.specs = specs
        self.scenario = scenario
        self.study_window = study_window


def study_window_for(ignition, tz, pre_days=PRE_FIRE_DAYS,
                     post_days=POST_FIRE_DAYS):
    """Start at local midnight C{pre_days} before the ignition date,
    end C{post_days} after ignition."""
    first = timeutil.localDate(ignition, tz) - datetime.timedelta(
        days=pre_days)
    return (timeutil.localMidnight(first, tz), ignition + post_days * DAY)


def _offset(origin, east_km, north_km):
    return geo.unproject(east_km * 1000.0, north_km * 1000.0, origin)


def _box(center, cx, cy, width, height):
    sw = _offset(center, cx - width / 2.0, cy - height / 2.0)
    ne = _offset(center, cx + width / 2.0, cy + height / 2.0)
    return geo.ZoneGeometry.rectangle(sw.lat, sw.lon, ne.lat, ne.lon)


def generate_scenario(template, seed, ignition=DEFAULT_IGNITION,
                      tz=DEFAULT_TZ):
    """Build one of the scenario templates.

    BASIC has a single zone warned 3 days, ordered 5 days and lifted 9
    days after ignition. ORDER_FIRST adds an order-only zone ordered
    after 2 days, ahead of every warning. OVERLAPPING adds a second zone
    covering half of the first with a later timeline. The seed shifts
    the layout by up to a kilometer and draws tract populations.

    @rtype: L{evactrace.scenario.Scenario}
    """
    template = Template(template)
    rng = np.random.default_rng(seed)
    shift = rng.uniform(-1.0, 1.0, size=2)
    center = _offset(CENTER, shift[0], shift[1])

    if template is Template.BASIC:
        zones = [
            EvacZone('Z1', _box(center, 0, 0, ZONE_KM, ZONE_KM),
                     ignition + 3 * DAY, ignition + 5 * DAY,
                     ignition + 9 * DAY),
        ]
    elif template is Template.ORDER_FIRST:
        zones = [
            EvacZone('Z1', _box(center, -ZONE_KM / 2, 0, ZONE_KM, ZONE_KM),
                     None, ignition + 2 * DAY, ignition + 9 * DAY),
            EvacZone('Z2', _box(center, ZONE_KM / 2, 0, ZONE_KM, ZONE_KM),
                     ignition + 3 * DAY, ignition + 5 * DAY,
                     ignition + 10 * DAY),
        ]
    else:
        zones = [
            EvacZone('Z1', _box(center, 0, 0, ZONE_KM, ZONE_KM),
                     ignition + 3 * DAY, ignition + 5 * DAY,
                     ignition + 9 * DAY),
            EvacZone('Z2', _box(center, ZONE_KM / 2, 0, ZONE_KM, ZONE_KM),
                     ignition + 4 * DAY, ignition + 6 * DAY,
                     ignition + 10 * DAY),
        ]

    # Tracts tile the zones plus the shadow buffer, with room to spare
    south, west, north, east = _zonesBounds(zones, geo.FIVE_MILES_KM + 2.0)
    step_lat = (north - south) / TRACT_GRID
    step_lon = (east - west) / TRACT_GRID
    tracts = []
    for row in range(TRACT_GRID):
        for col in range(TRACT_GRID):
            cell = geo.ZoneGeometry.rectangle(
                south + row * step_lat, west + col * step_lon,
                south + (row + 1) * step_lat, west + (col + 1) * step_lon)
            tracts.append(
                Tract('T%02d' % (row * TRACT_GRID + col + 1), cell,
                      int(rng.integers(2000, 8000))))

    s = Scenario(ignition, zones, tracts, tz=tz)
    return s.check()


def _edgeDistance(point, s):
    return min(z.geometry.distance_many_km(point.lat, point.lon)
               for z in s.zones)


def _sampleBox(rng, south, west, north, east):
    return geo.GeoPoint(float(rng.uniform(south, north)),
                        float(rng.uniform(west, east)))


def _zonesBounds(zones, margin_km=0.0):
    bounds = [z.geometry.bounds for z in zones]
    south = min(b[0] for b in bounds)
    west = min(b[1] for b in bounds)
    north = max(b[2] for b in bounds)
    east = max(b[3] for b in bounds)
    dlat = math.degrees(margin_km / geo.R_EARTH_KM)
    dlon = dlat / math.cos(math.radians((south + north) / 2.0))
    return south - dlat, west - dlon, north + dlat, east + dlon


def _homeInZone(rng, s, agent_id, accept=None):
    south, west, north, east = _zonesBounds(s.zones)
    for _ in range(_MAX_TRIES):
        point = _sampleBox(rng, south, west, north, east)
        placement = placement_of(agent_id, point, s)
        if placement.location_class is not LocationClass.IN_ZONE:
            continue
        if _edgeDistance(point, s) < EDGE_MARGIN_KM:
            continue
        zone = s.zone(placement.zone_id)
        if accept is None or accept(zone):
            return point, placement
    raise GenerationError('%s: no in-zone home satisfies the script' %
                          (agent_id, ))


def _homeNearZone(rng, s, agent_id):
    south, west, north, east = _zonesBounds(s.zones, s.shadow_buffer_km)
    for _ in range(_MAX_TRIES):
        point = _sampleBox(rng, south, west, north, east)
        placement = placement_of(agent_id, point, s)
        if placement.location_class is LocationClass.NEAR_ZONE and \
           EDGE_MARGIN_KM <= placement.distance_km <= \
           s.shadow_buffer_km - EDGE_MARGIN_KM:
            return point, placement
    raise GenerationError('%s: no near-zone home found' % (agent_id, ))


def _evacuationDestination(rng, home, s, agent_id):
    for _ in range(_MAX_TRIES):
        bearing = rng.uniform(0, 2 * math.pi)
        dist = rng.uniform(25.0, 45.0)
        point = _offset(home, dist * math.sin(bearing),
                        dist * math.cos(bearing))
        if not any(geo.contains(z.geometry, point) for z in s.zones):
            return point
    raise GenerationError('%s: no destination outside the zones' %
                          (agent_id, ))


def _zoneDestination(rng, home, s):
    """A point inside some zone, beyond the home buffer; None if the
    zones are too small for one."""
    need = s.home_buffer_d_km + 1.0
    south, west, north, east = _zonesBounds(s.zones)
    for _ in range(_MAX_TRIES):
        point = _sampleBox(rng, south, west, north, east)
        if geo.haversine_km(home, point) < need:
            continue
        if any(geo.contains(z.geometry, point) for z in s.zones) and \
           _edgeDistance(point, s) >= EDGE_MARGIN_KM:
            return point
    return None


def _uniformInstant(rng, low, high):
    if high <= low:
        return int(low)
    return int(rng.integers(low, high))


def _scriptAgent(agent_id, label, s, rng, seed, ping_rate_per_hour,
                 position_noise_m):
    """Choose home, departure, destination and return for a label."""
    ignition = s.ignition
    county_alert = first_county_alert(s)
    departure = destination = return_time = None
    silent = False

    def spec(home):
        return AgentSpec(agent_id, home, label, departure, destination,
                         return_time, ping_rate_per_hour, position_noise_m,
                         seed, silent)

    if label is ResidentLabel.SELF_EVACUEE:
        if rng.random() < 0.5:
            home, placement = _homeInZone(rng, s, agent_id)
            zone = s.zone(placement.zone_id)
            alert, lift = zone_first_alert(zone), zone.lifted
        else:
            home, placement = _homeNearZone(rng, s, agent_id)
            alert = county_alert
            lift = s.zone(placement.zone_id).lifted
        departure = _uniformInstant(rng, ignition + 2 * HOUR,
                                    alert - 2 * HOUR)
    elif label is ResidentLabel.SHADOW_EVACUEE:
        home, placement = _homeNearZone(rng, s, agent_id)
        lift = s.zone(placement.zone_id).lifted
        departure = _uniformInstant(
            rng, county_alert + HOUR,
            min(county_alert + 3 * DAY, lift - 2 * DAY))
    elif label is ResidentLabel.EVACUEE_UNDER_WARNING:
        home, placement = _homeInZone(
            rng, s, agent_id, lambda z: z.warning_issued is not None)
        zone = s.zone(placement.zone_id)
        lift = zone.lifted
        until = zone.order_issued if zone.order_issued is not None \
            else lift - DAY
        departure = _uniformInstant(rng, zone.warning_issued + HOUR,
                                    until - HOUR)
    elif label is ResidentLabel.ORDERED_EVACUEE:
        home, placement = _homeInZone(
            rng, s, agent_id, lambda z: z.order_issued is not None)
        zone = s.zone(placement.zone_id)
        lift = zone.lifted
        departure = _uniformInstant(rng, zone.order_issued + HOUR,
                                    min(zone.order_issued + 2 * DAY,
                                        lift - DAY))
    elif label is ResidentLabel.UNCATEGORIZED:
        home, placement = _homeInZone(rng, s, agent_id)
        zone = s.zone(placement.zone_id)
        if rng.random() < 0.5:
            silent = True
        else:
            # Leaves after the alert and comes home before the lift
            alert = zone_first_alert(zone)
            departure = _uniformInstant(rng, alert + HOUR, alert + 12 * HOUR)
            return_time = zone.lifted - _uniformInstant(
                rng, 12 * HOUR, DAY)
            destination = _evacuationDestination(rng, home, s, agent_id)
        return spec(home)
    else:
        if label is ResidentLabel.NON_EVACUEE_IN_ZONE:
            home, placement = _homeInZone(rng, s, agent_id)
        else:
            home, placement = _homeNearZone(rng, s, agent_id)
        if rng.random() < 0.5:
            stop = _zoneDestination(rng, home, s)
            if stop is not None:
                destination = stop
                departure = _uniformInstant(rng, ignition + DAY,
                                            ignition + 4 * DAY)
                return_time = departure + _uniformInstant(
                    rng, 2 * DAY + 12 * HOUR, 3 * DAY + 12 * HOUR)
        return spec(home)

    destination = _evacuationDestination(rng, home, s, agent_id)
    return_time = lift + _uniformInstant(rng, 6 * HOUR, 30 * HOUR)
    return spec(home)


def _pointsNear(rng, center, n, radius_km):
    bearing = rng.uniform(0, 2 * math.pi, size=n)
    dist = rng.uniform(0, radius_km, size=n) * 1000.0
    lat = center.lat + np.degrees(dist * np.cos(bearing) / geo.R_EARTH_M)
    lon = center.lon + np.degrees(
        dist * np.sin(bearing) /
        (geo.R_EARTH_M * math.cos(math.radians(center.lat))))
    return lat, lon


def _agentPings(spec, s, study_window):
    """Timestamps, positions and accuracies realising C{spec}."""
    rng = np.random.default_rng(spec.seed)
    start, end = study_window
    window = NightWindow(tz=s.tz)

    n = rng.poisson(spec.ping_rate_per_hour * (end - start) / float(HOUR))
    times = [start + rng.integers(0, end - start + 1, size=n)]

    guaranteed = []
    one = datetime.timedelta(days=1)
    for day in ingest.pre_fire_days(start, s.ignition, s.tz):
        # Between 23:00 and 05:00 local, before ignition
        midnight = timeutil.localMidnight(day + one, s.tz)
        late = min(5 * HOUR, s.ignition - midnight)
        guaranteed.append(midnight + int(rng.integers(-HOUR, late)))
    if spec.departure is not None:
        guaranteed.extend([spec.departure - 1, spec.departure + 600])
    if spec.return_time is not None:
        guaranteed.append(spec.return_time)
    times.append(np.array(guaranteed, dtype=np.int64))

    ts = np.unique(np.concatenate(times).astype(np.int64))
    ts = ts[(ts >= start) & (ts <= end)]
    if spec.silent_after_ignition:
        ts = ts[ts < s.ignition]
    n = ts.size

    home = spec.true_home
    lats = np.full(n, home.lat)
    lons = np.full(n, home.lon)
    night = window.mask(ts) if n else np.zeros(0, dtype=bool)

    # A fixed daytime place within half the home buffer
    reach = max(0.5, min(3.0, s.home_buffer_d_km / 2.0 - 0.5))
    bearing = rng.uniform(0, 2 * math.pi)
    dist = rng.uniform(0.5 * reach, reach)
    day_place = _offset(home, dist * math.sin(bearing),
                        dist * math.cos(bearing))
    out = ~night & (rng.random(n) < 0.4)

    away = np.zeros(n, dtype=bool)
    if spec.departure is not None:
        away = ts >= spec.departure
        if spec.return_time is not None:
            away &= ts < spec.return_time
    out &= ~away
    lats[out] = day_place.lat
    lons[out] = day_place.lon

    if away.any():
        lats[away] = spec.destination.lat
        lons[away] = spec.destination.lon
        roam = away & ~night
        if roam.any():
            lats[roam], lons[roam] = _pointsNear(rng, spec.destination,
                                                 int(roam.sum()), 0.5)

    if spec.position_noise_m > 0 and n:
        north = rng.normal(0, spec.position_noise_m, n)
        east = rng.normal(0, spec.position_noise_m, n)
        lats = lats + np.degrees(north / geo.R_EARTH_M)
        lons = lons + np.degrees(east /
                                 (geo.R_EARTH_M * np.cos(np.radians(lats))))

    accuracy = np.round(rng.uniform(5.0, 60.0, n), 1)
    return ts, lats, lons, accuracy, away


def _checkTrace(spec, s, ts, lats, lons, away, study_window):
    """Raise C{L{GenerationError}} unless the trace keeps its script."""
    home = spec.true_home
    D = s.home_buffer_d_km
    dist = geo.haversine_km_many(home.lat, home.lon, lats, lons)

    if (dist[~away] > D).any():
        raise GenerationError('%s: a ping at home lies beyond the buffer' %
                              (spec.agent_id, ))
    if spec.departure is not None and not spec.silent_after_ignition:
        if not away.any() or (dist[away] <= D).any():
            raise GenerationError('%s: the absence is not realised' %
                                  (spec.agent_id, ))

    window = NightWindow(tz=s.tz)
    pre = ts < s.ignition
    nights = window.nightKeys(ts[pre & window.mask(ts)])
    days = ingest.pre_fire_days(study_window[0], s.ignition, s.tz)
    wanted = np.array(days, dtype='datetime64[D]')
    missing = wanted[~np.isin(wanted, nights)]
    if missing.size:
        raise GenerationError('%s: no ping on the night of %s' %
                              (spec.agent_id, missing[0]))


def generate_agent_trace(spec, s, study_window):
    """Realise one agent's script as a time-ordered trace.

    @type spec: AgentSpec
    @type s: L{evactrace.scenario.Scenario}
    @param study_window: (start, end) instants

    @rtype: L{evactrace.ingest.DeviceTrace}

    @raises GenerationError: for an infeasible script
    """
    spec.check(s)
    ts, lats, lons, _, away = _agentPings(spec, s, study_window)
    _checkTrace(spec, s, ts, lats, lons, away, study_window)
    return ingest.DeviceTrace(spec.agent_id, ts, lats, lons)


def largest_remainder(n, mix):
    """Split C{n} into integer counts proportional to C{mix}.

    Floors first; the leftover units go to the largest fractional
    parts, ties to the earlier label.

    @param mix: ResidentLabel to share
    @returns: ResidentLabel to count, in label order
    """
    labels = [label for label in ResidentLabel if label in mix]
    quotas = [n * mix[label] for label in labels]
    counts = [int(math.floor(q + 1e-9)) for q in quotas]
    left = n - sum(counts)
    order = sorted(range(len(labels)),
                   key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:left]:
        counts[i] += 1
    return dict(zip(labels, counts))


def parseMix(text):
    """Parse C{label=share,...}; labels are ResidentLabel values."""
    mix = {}
    for item in text.split(','):
        item = item.strip()
        if not item:
            continue
        if '=' not in item:
            raise ValueError('mix entry %r is not label=share' % (item, ))
        name, share = item.split('=', 1)
        mix[ResidentLabel(name.strip())] = float(share)
    return mix


def checkMix(mix):
    mix = dict((ResidentLabel(k) if not isinstance(k, ResidentLabel) else k,
                float(v)) for k, v in mix.items())
    if any(v < 0 for v in mix.values()):
        raise ValueError('mix shares must not be negative')
    if abs(sum(mix.values()) - 1.0) > 1e-6:
        raise ValueError('mix shares sum to %r, not 1' %
                         (sum(mix.values()), ))
    return mix


def _corrupt(rng, pings, inaccurate_rate, duplicate_rate):
    """Append inaccurate copies and exact duplicates of random pings."""
    extra = []
    total = len(pings)
    n_bad = int(round(inaccurate_rate * total))
    if n_bad:
        rows = pings.iloc[np.sort(rng.choice(total, n_bad, replace=False))]
        bad = rows.copy()
        bad['lat'] = bad['lat'] + rng.uniform(-0.02, 0.02, n_bad)
        bad['lon'] = bad['lon'] + rng.uniform(-0.02, 0.02, n_bad)
        bad['accuracy_m'] = np.round(rng.uniform(300.0, 2000.0, n_bad), 1)
        extra.append(bad)
    n_dup = int(round(duplicate_rate * total))
    if n_dup:
        extra.append(
            pings.iloc[np.sort(rng.choice(total, n_dup, replace=False))])
    if not extra:
        return pings
    logger.info('Injected %d inaccurate and %d duplicate pings', n_bad, n_dup)
    pings = pd.concat([pings] + extra, ignore_index=True)
    return pings.sort_values(['device_id', 'timestamp'],
                             kind='mergesort').reset_index(drop=True)


def generate_dataset(n_agents, mix, s, seed, study_window=None,
                     ping_rate_per_hour=4.0, position_noise_m=30.0,
                     inaccurate_rate=0.0, duplicate_rate=0.0):
    """Script C{n_agents} agents in proportions C{mix} and emit their
    pings with the truth table.

    @param mix: ResidentLabel (or its value) to share; shares sum to 1
    @param inaccurate_rate: share of extra pings with accuracy worse
        than the cleaning threshold
    @param duplicate_rate: share of extra exact duplicate pings

    @rtype: SyntheticDataset
    """
    mix = checkMix(mix)
    if n_agents < 0:
        raise ValueError('n_agents must not be negative')
    if study_window is None:
        study_window = study_window_for(s.ignition, s.tz)

    counts = largest_remainder(n_agents, mix)
    labels = []
    for label, count in counts.items():
        labels.extend([label] * count)

    children = np.random.SeedSequence(seed).spawn(n_agents + 1)
    dataset_rng = np.random.default_rng(children[0])
    dataset_rng.shuffle(labels)

    specs = []
    columns = {'device_id': [], 'timestamp': [], 'lat': [], 'lon': [],
               'accuracy_m': []}
    truth = {}
    for i, label in enumerate(labels):
        child = children[i + 1]
        agent_id = 'agent%05d' % (i, )
        spec = _scriptAgent(agent_id, label, s, np.random.default_rng(child),
                            int(child.generate_state(1)[0]),
                            ping_rate_per_hour, position_noise_m)
        spec.check(s)
        ts, lats, lons, accuracy, away = _agentPings(spec, s, study_window)
        _checkTrace(spec, s, ts, lats, lons, away, study_window)

        specs.append(spec)
        columns['device_id'].append(np.full(ts.size, agent_id, dtype=object))
        columns['timestamp'].append(ts)
        columns['lat'].append(lats)
        columns['lon'].append(lons)
        columns['accuracy_m'].append(accuracy)
        truth[agent_id] = formats.TruthRecord(
            agent_id, label, spec.departure if label.is_evacuee else None,
            spec.true_home)

    if specs:
        pings = pd.DataFrame(dict(
            (k, np.concatenate(v)) for k, v in columns.items()),
            columns=ingest.COLUMNS)
        pings = _corrupt(dataset_rng, pings, inaccurate_rate, duplicate_rate)
    else:
        pings = ingest.empty_frame()

    logger.info('Generated %d agents and %d pings', len(specs), len(pings))
    return SyntheticDataset(pings, truth, specs, s, study_window)


def write_bundle(dataset, scenario, outdir):
    """Write pings.csv, zones.geojson, tracts.geojson, truth.csv and a
    config.txt that points at them.

    @returns: the store the bundle was written to
    @rtype: L{evactrace.store.filestore.OutputStore}
    """
    store = OutputStore(outdir)
    s = scenario
    with store.stage('synth'):
        with store.open('pings.csv', text=True) as f:
            formats.writePings(f, dataset.pings)
        for name, doc in (('zones.geojson', zones_geojson(s)),
                          ('tracts.geojson', tracts_geojson(s))):
            store.writeBytes(name, json.dumps(doc, indent=1,
                                              sort_keys=True).encode('utf-8'))
        with store.open('truth.csv', text=True) as f:
            formats.writeTruth(f, dataset.truth)

        config = config_mod.Config(
            ignition=s.ignition, tz=s.tz,
            study_start=dataset.study_window[0],
            study_end=dataset.study_window[1],
            home_buffer_d_km=s.home_buffer_d_km,
            shadow_buffer_km=s.shadow_buffer_km,
            outside_absence_days=s.outside_absence_days,
            in_zone_absence_days=s.in_zone_absence_days,
            pings='pings.csv', zones='zones.geojson', tracts='tracts.geojson',
            truth='truth.csv')
        store.writeBytes('config.txt', config.toKV())
    return store
