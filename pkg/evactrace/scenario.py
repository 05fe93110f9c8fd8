# -*- test-case-name: evactrace.test.test_scenario -*-
"""
The event a run analyses: fire ignition, evacuation zones with their
warning, order and lift times, and census tracts with population.

Zones carry the alert timeline and tracts carry population. Homes are
placed relative to zones: inside one (first declared wins where zones
overlap), near one (within the shadow buffer of its boundary), or out
of scope.
"""

__all__ = [
    'Scenario',
    'EvacZone',
    'Tract',
    'HomePlacement',
    'LocationClass',
    'ScenarioError',
    'load_scenario',
    'place_home',
    'placement_of',
    'place_homes',
    'first_county_alert',
    'zone_first_alert',
    'nearest_zone_lift',
    'write_scenario',
    'zones_geojson',
    'tracts_geojson',
]

import enum
import json
import logging
import math

import numpy as np

from evactrace import geo
from evactrace import timeutil
from evactrace.store import filestore

logger = logging.getLogger(__name__)

# Boundary distances closer than this are treated as equal
_TIE_KM = 1e-9


class ScenarioError(ValueError):
    """A scenario failed validation.

    @ivar violations: every problem found, as (feature id, message)
    """

    def __init__(self, violations):
        ValueError.__init__(self, violations)
        self.violations = list(violations)

    def __str__(self):
        return 'invalid scenario: ' + '; '.join(
            '%s: %s' % (fid, msg) for fid, msg in self.violations)


class LocationClass(enum.Enum):
    IN_ZONE = 'in_zone'
    NEAR_ZONE = 'near_zone'
    OUT_OF_SCOPE = 'out_of_scope'


class EvacZone(object):
    """An area placed under warning and/or order, later lifted.

    @ivar warning_issued: instant or None
    @ivar order_issued: instant or None
    @ivar lifted: instant
    """

    def __init__(self, zone_id, geometry, warning_issued=None,
                 order_issued=None, lifted=None):
        self.zone_id = zone_id
        self.geometry = geometry
        self.warning_issued = warning_issued
        self.order_issued = order_issued
        self.lifted = lifted

    def violations(self):
        problems = []
        if self.warning_issued is None and self.order_issued is None:
            problems.append('neither warning_issued nor order_issued given')
        if self.warning_issued is not None and \
           self.order_issued is not None and \
           self.warning_issued > self.order_issued:
            problems.append('warning issued after order')
        if self.lifted is None:
            problems.append('lifted is required')
        else:
            for name in ('warning_issued', 'order_issued'):
                when = getattr(self, name)
                if when is not None and when >= self.lifted:
                    problems.append('%s is not before lifted' % (name, ))
        return problems

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<EvacZone %s warning=%s order=%s lifted=%s>' % (
            self.zone_id, timeutil.formatInstant(self.warning_issued),
            timeutil.formatInstant(self.order_issued),
            timeutil.formatInstant(self.lifted))


class Tract(object):

    def __init__(self, tract_id, geometry, population):
        if population < 0:
            raise ValueError('negative population for tract %r' %
                             (tract_id, ))
        self.tract_id = tract_id
        self.geometry = geometry
        self.population = int(population)

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<Tract %s population=%d>' % (self.tract_id, self.population)


class HomePlacement(object):
    """Where a home lies relative to the evacuation zones.

    @ivar zone_id: containing zone for IN_ZONE, nearest zone for
        NEAR_ZONE, None otherwise
    @ivar distance_km: boundary distance for NEAR_ZONE, else None
    @ivar tract_id: containing tract or None
    """

    def __init__(self, device_id, location_class, zone_id=None,
                 distance_km=None, tract_id=None):
        self.device_id = device_id
        self.location_class = location_class
        self.zone_id = zone_id
        self.distance_km = distance_km
        self.tract_id = tract_id

    @property
    def in_scope(self):
        return self.location_class is not LocationClass.OUT_OF_SCOPE

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<HomePlacement %s %s zone=%s tract=%s>' % (
            self.device_id, self.location_class.value, self.zone_id,
            self.tract_id)


class Scenario(object):
    """Immutable event context shared by the classifier and metrics.

    @ivar ignition: fire start instant
    @ivar tz: IANA zone for local-time rules
    @ivar zones: list of EvacZone in declaration order
    @ivar tracts: list of Tract in declaration order
    @ivar home_buffer_d_km: away-from-home radius
    @ivar outside_absence_days: absence needed outside the zones
    @ivar in_zone_absence_days: absence needed inside a zone
    """

    def __init__(self, ignition, zones, tracts=(), tz='UTC',
                 shadow_buffer_km=geo.FIVE_MILES_KM,
                 home_buffer_d_km=geo.FIVE_MILES_KM,
                 outside_absence_days=2.0, in_zone_absence_days=1.0):
        self.ignition = ignition
        self.tz = tz
        self.zones = list(zones)
        self.tracts = list(tracts)
        self.shadow_buffer_km = shadow_buffer_km
        self.home_buffer_d_km = home_buffer_d_km
        self.outside_absence_days = outside_absence_days
        self.in_zone_absence_days = in_zone_absence_days
        self._zones_by_id = dict((z.zone_id, z) for z in self.zones)

    @classmethod
    def fromConfig(cls, config, zones, tracts):
        return cls(config.ignition, zones, tracts, tz=config.tz,
                   shadow_buffer_km=config.shadow_buffer_km,
                   home_buffer_d_km=config.home_buffer_d_km,
                   outside_absence_days=config.outside_absence_days,
                   in_zone_absence_days=config.in_zone_absence_days)

    def violations(self):
        """Every (feature id, message) problem with this scenario."""
        problems = []
        seen = set()
        for zone in self.zones:
            if zone.zone_id in seen:
                problems.append((zone.zone_id, 'duplicate zone_id'))
            seen.add(zone.zone_id)
            for msg in zone.violations():
                problems.append((zone.zone_id, msg))
            for name in ('warning_issued', 'order_issued'):
                when = getattr(zone, name)
                if when is not None and when < self.ignition:
                    problems.append((zone.zone_id,
                                     '%s precedes ignition' % (name, )))
        seen = set()
        for tract in self.tracts:
            if tract.tract_id in seen:
                problems.append((tract.tract_id, 'duplicate tract_id'))
            seen.add(tract.tract_id)
        if not self.zones:
            problems.append(('zones', 'no evacuation zones'))
        return problems

    def check(self):
        problems = self.violations()
        if problems:
            raise ScenarioError(problems)
        return self

    def zone(self, zone_id):
        """The zone with C{zone_id}.

        @raises KeyError: if there is no such zone
        """
        return self._zones_by_id[zone_id]

    def tract_of(self, point):
        """Id of the first declared tract containing C{point}, or None."""
        for tract in self.tracts:
            if geo.contains(tract.geometry, point):
                return tract.tract_id
        return None

    def tract(self, tract_id):
        for tract in self.tracts:
            if tract.tract_id == tract_id:
                return tract
        raise KeyError(tract_id)

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<Scenario ignition=%s %d zones %d tracts>' % (
            timeutil.formatInstant(self.ignition), len(self.zones),
            len(self.tracts))


def _readCollection(source, kind, violations):
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, 'read'):
        doc = json.load(source)
    else:
        with open(source, 'rb') as f:
            doc = json.load(f)

    if doc.get('type') != 'FeatureCollection':
        violations.append((kind, 'not a GeoJSON FeatureCollection'))
        return []
    return doc.get('features') or []


def _optionalInstant(props, name, fid, violations):
    value = props.get(name)
    if value is None or value == '':
        return None
    try:
        return timeutil.parseInstant(value)
    except ValueError as why:
        violations.append((fid, '%s: %s' % (name, why)))
        return None


def _geometry(feature, fid, violations):
    geometry = feature.get('geometry')
    if not geometry:
        violations.append((fid, 'missing geometry'))
        return None
    try:
        return geo.ZoneGeometry.from_geojson(geometry, label=fid)
    except geo.GeometryError as why:
        violations.append((fid, str(why)))
        return None


def _parseZones(features, violations):
    zones = []
    for num, feature in enumerate(features):
        props = feature.get('properties') or {}
        zone_id = props.get('zone_id')
        fid = zone_id if zone_id else 'zone feature #%d' % (num, )
        if not isinstance(zone_id, str) or not zone_id:
            violations.append((fid, 'zone_id is required'))
        geometry = _geometry(feature, fid, violations)
        zone = EvacZone(fid, geometry,
                        _optionalInstant(props, 'warning_issued', fid,
                                         violations),
                        _optionalInstant(props, 'order_issued', fid,
                                         violations),
                        _optionalInstant(props, 'lifted', fid, violations))
        zones.append(zone)
    return zones


def _parseTracts(features, violations):
    tracts = []
    for num, feature in enumerate(features):
        props = feature.get('properties') or {}
        tract_id = props.get('tract_id')
        fid = str(tract_id) if tract_id else 'tract feature #%d' % (num, )
        if tract_id is None or tract_id == '':
            violations.append((fid, 'tract_id is required'))
        geometry = _geometry(feature, fid, violations)
        population = props.get('population')
        try:
            population = int(population)
            if population < 0:
                raise ValueError(population)
        except (TypeError, ValueError):
            violations.append((fid, 'population must be a nonnegative '
                               'integer, got %r' % (population, )))
            population = 0
        if geometry is not None:
            tracts.append(Tract(fid, geometry, population))
    return tracts


def load_scenario(zones_source, tracts_source, config):
    """Read zones and tracts GeoJSON and validate the whole scenario.

    @param zones_source: path, file or parsed FeatureCollection
    @param tracts_source: path, file or parsed FeatureCollection; None
        for a scenario without tracts
    @type config: L{evactrace.config.Config}

    @rtype: Scenario

    @raises ScenarioError: listing every violation found
    """
    config.require('ignition')
    violations = []
    zones = _parseZones(_readCollection(zones_source, 'zones', violations),
                        violations)
    tracts = []
    if tracts_source is not None:
        tracts = _parseTracts(
            _readCollection(tracts_source, 'tracts', violations), violations)

    scenario = Scenario.fromConfig(config, zones, tracts)
    violations.extend(v for v in scenario.violations() if v not in violations)

    if violations:
        raise ScenarioError(violations)

    logger.info('Loaded scenario with %d zones and %d tracts',
                len(zones), len(tracts))
    return scenario


def zone_first_alert(zone):
    """The earlier of the zone's warning and order."""
    return min(t for t in (zone.warning_issued, zone.order_issued)
               if t is not None)


def first_county_alert(s):
    """The first warning or order issued in any zone."""
    if not s.zones:
        raise ValueError('scenario has no zones')
    return min(zone_first_alert(z) for z in s.zones)


def _nearestZone(point, s, zones=None):
    """(zone, distance_km) of the zone whose boundary is nearest;
    equidistant zones resolve to the earlier lift."""
    best = None
    for zone in zones if zones is not None else s.zones:
        d = geo.distance_to_boundary_km(zone.geometry, point)
        if best is None or d < best[1] - _TIE_KM or \
           (abs(d - best[1]) <= _TIE_KM and zone.lifted < best[0].lifted):
            best = (zone, d)
    return best


def _nearCandidates(point, s):
    """Zones whose bounding box lies within the shadow buffer."""
    lat_margin = s.shadow_buffer_km / (geo.R_EARTH_KM * math.pi / 180.0)
    lon_margin = lat_margin / max(math.cos(math.radians(point.lat)), 1e-6)
    found = []
    for zone in s.zones:
        south, west, north, east = zone.geometry.bounds
        if south - lat_margin <= point.lat <= north + lat_margin and \
           west - lon_margin <= point.lon <= east + lon_margin:
            found.append(zone)
    return found


def placement_of(device_id, point, s):
    """Place a point relative to the scenario's zones.

    @type point: L{evactrace.geo.GeoPoint}
    @rtype: HomePlacement
    """
    tract_id = s.tract_of(point)
    for zone in s.zones:
        if geo.contains(zone.geometry, point):
            return HomePlacement(device_id, LocationClass.IN_ZONE,
                                 zone.zone_id, None, tract_id)

    candidates = _nearCandidates(point, s)
    if candidates:
        zone, d = _nearestZone(point, s, candidates)
        if d <= s.shadow_buffer_km:
            return HomePlacement(device_id, LocationClass.NEAR_ZONE,
                                 zone.zone_id, d, tract_id)
    return HomePlacement(device_id, LocationClass.OUT_OF_SCOPE, None, None,
                         tract_id)


def place_home(h, s):
    """Place one home relative to the scenario's zones.

    @type h: L{evactrace.home_inference.HomeLocation}
    @type s: Scenario
    @rtype: HomePlacement
    """
    return placement_of(h.device_id, h.point, s)


def place_homes(homes, s):
    """Place many homes, testing containment in bulk.

    @param homes: device_id to HomeLocation
    @returns: device_id to HomePlacement
    """
    ids = sorted(homes)
    if not ids:
        return {}
    lats = np.array([homes[i].point.lat for i in ids])
    lons = np.array([homes[i].point.lon for i in ids])

    zone_of = np.full(len(ids), -1, dtype=np.int64)
    for num, zone in enumerate(s.zones):
        free = zone_of < 0
        if not free.any():
            break
        inside = zone.geometry.contains_many(lats[free], lons[free])
        idx = np.flatnonzero(free)[inside]
        zone_of[idx] = num

    tract_of = np.full(len(ids), -1, dtype=np.int64)
    for num, tract in enumerate(s.tracts):
        free = tract_of < 0
        if not free.any():
            break
        inside = tract.geometry.contains_many(lats[free], lons[free])
        tract_of[np.flatnonzero(free)[inside]] = num

    placements = {}
    for k, device_id in enumerate(ids):
        tract_id = s.tracts[tract_of[k]].tract_id if tract_of[k] >= 0 \
            else None
        if zone_of[k] >= 0:
            placements[device_id] = HomePlacement(
                device_id, LocationClass.IN_ZONE,
                s.zones[zone_of[k]].zone_id, None, tract_id)
            continue
        point = homes[device_id].point
        candidates = _nearCandidates(point, s)
        nearest = _nearestZone(point, s, candidates) if candidates else None
        if nearest is not None and nearest[1] <= s.shadow_buffer_km:
            placements[device_id] = HomePlacement(
                device_id, LocationClass.NEAR_ZONE, nearest[0].zone_id,
                nearest[1], tract_id)
        else:
            placements[device_id] = HomePlacement(
                device_id, LocationClass.OUT_OF_SCOPE, None, None, tract_id)

    counts = {}
    for p in placements.values():
        counts[p.location_class] = counts.get(p.location_class, 0) + 1
    logger.info('Placed %d homes: %d in zone, %d near, %d out of scope',
                len(placements), counts.get(LocationClass.IN_ZONE, 0),
                counts.get(LocationClass.NEAR_ZONE, 0),
                counts.get(LocationClass.OUT_OF_SCOPE, 0))
    return placements


def nearest_zone_lift(h, s):
    """Lift time of the zone nearest a NEAR_ZONE home.

    @raises evactrace.geo.ContractError: if the home is not NEAR_ZONE
    """
    placement = place_home(h, s)
    if placement.location_class is not LocationClass.NEAR_ZONE:
        raise geo.ContractError('nearest_zone_lift needs a NEAR_ZONE home, '
                                '%s is %s' % (h.device_id,
                                              placement.location_class.value))
    return s.zone(placement.zone_id).lifted


def zones_geojson(s):
    features = []
    for zone in s.zones:
        features.append({
            'type': 'Feature',
            'properties': {
                'zone_id': zone.zone_id,
                'warning_issued': timeutil.formatInstant(
                    zone.warning_issued) or None,
                'order_issued': timeutil.formatInstant(zone.order_issued) or
                None,
                'lifted': timeutil.formatInstant(zone.lifted),
            },
            'geometry': zone.geometry.to_geojson(),
        })
    return {'type': 'FeatureCollection', 'features': features}


def tracts_geojson(s):
    features = []
    for tract in s.tracts:
        features.append({
            'type': 'Feature',
            'properties': {
                'tract_id': tract.tract_id,
                'population': tract.population,
            },
            'geometry': tract.geometry.to_geojson(),
        })
    return {'type': 'FeatureCollection', 'features': features}


def write_scenario(scenario, zones_path, tracts_path):
    """Write zones and tracts as GeoJSON FeatureCollections that
    C{L{load_scenario}} reads back."""
    for path, doc in ((zones_path, zones_geojson(scenario)),
                      (tracts_path, tracts_geojson(scenario))):
        with filestore.atomicWrite(path) as f:
            f.write(json.dumps(doc, indent=1, sort_keys=True).encode('utf-8'))
