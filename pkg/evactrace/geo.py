# -*- test-case-name: evactrace.test.test_geo -*-
"""
Geometric primitives shared by all spatial logic: a local
equirectangular projection, the square-cell grid used for home
inference, great-circle distance, point-in-polygon and distance to a
zone boundary.

The projection is local equirectangular rather than UTM. Study areas
are county-scale, where its error stays below 0.1%, and a single
formula serves every zone on Earth without choosing a UTM strip.

Polygon edges are straight in longitude/latitude (the GeoJSON
convention). Containment is decided in that space, which the
projection maps affinely, so the answer is the same as in meters.
"""

__all__ = [
    'GeoPoint',
    'CellIndex',
    'GridSpec',
    'ZoneGeometry',
    'project',
    'project_many',
    'unproject',
    'cell_index',
    'cell_indices',
    'cell_centroid',
    'haversine_km',
    'haversine_km_many',
    'contains',
    'distance_to_boundary_km',
    'GeometryError',
    'OutOfGridError',
    'ContractError',
    'R_EARTH_M',
    'FIVE_MILES_KM',
]

import collections
import logging
import math

import numpy as np
from shapely.geometry import Polygon
from shapely.geometry.polygon import orient
from shapely.validation import explain_validity

logger = logging.getLogger(__name__)

R_EARTH_M = 6371000.0
R_EARTH_KM = R_EARTH_M / 1000.0

MILE_KM = 1.609344
# The buffer defaults use this rounded to 4 places (8.0467).
FIVE_MILES_KM = 5 * MILE_KM

# Cell arithmetic tolerance, as a fraction of a cell. Keeps points built
# exactly on a cell edge in the cell to their north/east after a
# projection round trip.
_CELL_EPS = 1e-9

# Tolerance, in degrees, for "point lies on an edge".
_EDGE_EPS = 1e-12

# Upper bound on point x edge matrix size for vectorised containment
_CHUNK_CELLS = 4000000


class GeometryError(ValueError):
    """A ring or polygon is degenerate or invalid."""


class OutOfGridError(ValueError):
    """A point falls outside the grid; widen the bounding box."""


class ContractError(ValueError):
    """An operation was called outside its precondition."""


GeoPoint = collections.namedtuple('GeoPoint', ['lat', 'lon'])
GeoPoint.__doc__ = "A WGS84 position in degrees."

CellIndex = collections.namedtuple('CellIndex', ['col', 'row'])
CellIndex.__doc__ = "Column (east) and row (north) of a grid cell."


def checkPoint(lat, lon):
    if not (-90.0 <= lat <= 90.0):
        raise ValueError('lat out of range: %r' % (lat, ))
    if not (-180.0 <= lon <= 180.0):
        raise ValueError('lon out of range: %r' % (lon, ))
    return GeoPoint(float(lat), float(lon))


def project(p, origin):
    """Project C{p} onto the plane tangent at C{origin}.

    east = R * dlon * cos(lat_origin), north = R * dlat (radians).

    @returns: (meters east, meters north)
    @rtype: (float, float)
    """
    east = R_EARTH_M * math.radians(p.lon - origin.lon) * \
        math.cos(math.radians(origin.lat))
    north = R_EARTH_M * math.radians(p.lat - origin.lat)
    return east, north


def project_many(lats, lons, origin):
    """Vectorised C{L{project}} over coordinate arrays."""
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    east = R_EARTH_M * np.radians(lons - origin.lon) * \
        math.cos(math.radians(origin.lat))
    north = R_EARTH_M * np.radians(lats - origin.lat)
    return east, north


def unproject(east, north, origin):
    """Inverse of C{L{project}}."""
    lat = origin.lat + math.degrees(north / R_EARTH_M)
    lon = origin.lon + math.degrees(
        east / (R_EARTH_M * math.cos(math.radians(origin.lat))))
    return GeoPoint(lat, lon)


class GridSpec(object):
    """A square-cell grid anchored at its southwest corner.

    @ivar origin: southwest corner of the grid
    @type origin: GeoPoint

    @ivar cell_size_m: cell edge in meters

    @ivar n_cols: number of cells eastward

    @ivar n_rows: number of cells northward
    """

    def __init__(self, origin, cell_size_m, n_cols, n_rows):
        if cell_size_m <= 0:
            raise ValueError('cell_size_m must be positive: %r' %
                             (cell_size_m, ))
        if n_cols < 1 or n_rows < 1:
            raise ValueError('grid needs at least one cell')
        self.origin = GeoPoint(float(origin[0]), float(origin[1]))
        self.cell_size_m = float(cell_size_m)
        self.n_cols = int(n_cols)
        self.n_rows = int(n_rows)

    @classmethod
    def covering(cls, lats, lons, cell_size_m, pad_cells=1):
        """Build the grid over the bounding box of the given points,
        padded by C{pad_cells} on every side.

        @raises ValueError: when no points are given
        """
        lats = np.asarray(lats, dtype=float)
        lons = np.asarray(lons, dtype=float)
        if lats.size == 0:
            raise ValueError('cannot build a grid over no points')

        sw = GeoPoint(float(lats.min()), float(lons.min()))
        pad = pad_cells * cell_size_m
        origin = unproject(-pad, -pad, sw)
        ne = GeoPoint(float(lats.max()), float(lons.max()))
        east, north = project(ne, origin)
        n_cols = int(math.floor(east / cell_size_m)) + pad_cells + 1
        n_rows = int(math.floor(north / cell_size_m)) + pad_cells + 1
        return cls(origin, cell_size_m, n_cols, n_rows)

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<GridSpec origin=(%.6f, %.6f) cell=%gm %dx%d>' % (
            self.origin.lat, self.origin.lon, self.cell_size_m, self.n_cols,
            self.n_rows)


def cell_indices(lats, lons, g):
    """Vectorised C{L{cell_index}}.

    @returns: (cols, rows, inside) where C{inside} masks the points that
        fall in the grid; cols/rows of outside points are meaningless
    """
    east, north = project_many(lats, lons, g.origin)
    cols = np.floor(east / g.cell_size_m + _CELL_EPS).astype(np.int64)
    rows = np.floor(north / g.cell_size_m + _CELL_EPS).astype(np.int64)
    inside = (cols >= 0) & (cols < g.n_cols) & (rows >= 0) & (rows < g.n_rows)
    return cols, rows, inside


def cell_index(p, g):
    """The cell containing C{p}. Cells are closed on their south and
    west edges.

    @rtype: CellIndex

    @raises OutOfGridError: if p lies outside the grid
    """
    east, north = project(p, g.origin)
    col = int(math.floor(east / g.cell_size_m + _CELL_EPS))
    row = int(math.floor(north / g.cell_size_m + _CELL_EPS))
    if not (0 <= col < g.n_cols and 0 <= row < g.n_rows):
        raise OutOfGridError('point (%r, %r) outside %r' % (p.lat, p.lon, g))
    return CellIndex(col, row)


def cell_centroid(c, g):
    """Unprojected center of cell C{c}."""
    half = 0.5 * g.cell_size_m
    return unproject(c.col * g.cell_size_m + half, c.row * g.cell_size_m + half,
                     g.origin)


def haversine_km(a, b):
    """Great-circle distance in kilometers."""
    dlat = math.radians(b.lat - a.lat)
    dlon = math.radians(b.lon - a.lon)
    h = math.sin(dlat / 2.0)**2 + math.cos(math.radians(a.lat)) * \
        math.cos(math.radians(b.lat)) * math.sin(dlon / 2.0)**2
    return 2.0 * R_EARTH_KM * math.asin(min(1.0, math.sqrt(h)))


def haversine_km_many(lat1, lon1, lat2, lon2):
    """Vectorised C{L{haversine_km}}; arguments broadcast."""
    lat1 = np.radians(np.asarray(lat1, dtype=float))
    lat2 = np.radians(np.asarray(lat2, dtype=float))
    dlat = lat2 - lat1
    dlon = np.radians(np.asarray(lon2, dtype=float) -
                      np.asarray(lon1, dtype=float))
    h = np.sin(dlat / 2.0)**2 + np.cos(lat1) * np.cos(lat2) * \
        np.sin(dlon / 2.0)**2
    return 2.0 * R_EARTH_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def _checkRing(ring, label):
    if len(ring) < 4:
        raise GeometryError('%s: ring has %d vertices, need at least 4' %
                            (label, len(ring)))
    if tuple(ring[0]) != tuple(ring[-1]):
        raise GeometryError('%s: ring is not closed' % (label, ))


class ZoneGeometry(object):
    """One or more polygons, each an outer ring with optional holes.

    Rings are sequences of C{(lon, lat)} pairs, closed (first vertex
    equals last), outer rings counterclockwise and holes clockwise;
    orientation is normalised on construction.

    @ivar polygons: [[outer, hole, ...], ...] as tuples of (lon, lat)
    """

    def __init__(self, polygons, label='geometry'):
        if not polygons:
            raise GeometryError('%s: no polygons' % (label, ))

        normalised = []
        for poly_num, rings in enumerate(polygons):
            if not rings:
                raise GeometryError('%s: polygon %d has no rings' %
                                    (label, poly_num))
            for ring in rings:
                _checkRing(ring, label)

            shape = Polygon(rings[0], rings[1:])
            if not shape.is_valid:
                raise GeometryError('%s: %s' % (label,
                                                explain_validity(shape)))
            shape = orient(shape, sign=1.0)
            normalised.append(
                [tuple(shape.exterior.coords)] +
                [tuple(hole.coords) for hole in shape.interiors])

        self.polygons = normalised
        self._buildEdges()

    @classmethod
    def from_geojson(cls, geometry, label='geometry'):
        """Build from a GeoJSON Polygon or MultiPolygon mapping."""
        if not isinstance(geometry, dict):
            raise GeometryError('%s: missing geometry' % (label, ))
        kind = geometry.get('type')
        coords = geometry.get('coordinates')
        if kind == 'Polygon':
            polygons = [coords]
        elif kind == 'MultiPolygon':
            polygons = coords
        else:
            raise GeometryError('%s: unsupported geometry type %r' %
                                (label, kind))
        try:
            polygons = [[[(float(v[0]), float(v[1])) for v in ring]
                         for ring in rings] for rings in polygons]
        except (TypeError, ValueError):
            raise GeometryError('%s: malformed coordinates' % (label, ))
        return cls(polygons, label=label)

    @classmethod
    def rectangle(cls, south, west, north, east):
        ring = [(west, south), (east, south), (east, north), (west, north),
                (west, south)]
        return cls([[ring]])

    def to_geojson(self):
        rings_of = [[[list(v) for v in ring] for ring in rings]
                    for rings in self.polygons]
        if len(rings_of) == 1:
            return {'type': 'Polygon', 'coordinates': rings_of[0]}
        return {'type': 'MultiPolygon', 'coordinates': rings_of}

    def _buildEdges(self):
        ax, ay, bx, by, poly_ids = [], [], [], [], []
        for poly_num, rings in enumerate(self.polygons):
            for ring in rings:
                pts = np.asarray(ring, dtype=float)
                ax.append(pts[:-1, 0])
                ay.append(pts[:-1, 1])
                bx.append(pts[1:, 0])
                by.append(pts[1:, 1])
                poly_ids.append(np.full(len(pts) - 1, poly_num))
        self._ax = np.concatenate(ax)
        self._ay = np.concatenate(ay)
        self._bx = np.concatenate(bx)
        self._by = np.concatenate(by)
        self._poly = np.concatenate(poly_ids)
        self._n_polys = len(self.polygons)

    @property
    def bounds(self):
        """(south, west, north, east) in degrees."""
        xs = np.concatenate([self._ax, self._bx])
        ys = np.concatenate([self._ay, self._by])
        return float(ys.min()), float(xs.min()), float(ys.max()), \
            float(xs.max())

    def vertices(self):
        """All vertices as (lats, lons) arrays."""
        return self._ay.copy(), self._ax.copy()

    def contains_many(self, lats, lons):
        """Vectorised C{L{contains}}.

        @rtype: numpy.ndarray of bool
        """
        lats = np.asarray(lats, dtype=float)
        lons = np.asarray(lons, dtype=float)
        result = np.zeros(lats.shape, dtype=bool)
        n_edges = len(self._ax)
        step = max(1, _CHUNK_CELLS // max(1, n_edges))
        for start in range(0, lats.size, step):
            py = lats[start:start + step, None]
            px = lons[start:start + step, None]
            result[start:start + step] = self._containsChunk(px, py)
        return result

    def _containsChunk(self, px, py):
        ax, ay, bx, by = self._ax, self._ay, self._bx, self._by
        dx = bx - ax
        dy = by - ay

        # Points on an edge are inside
        cross = dx * (py - ay) - dy * (px - ax)
        length = np.hypot(dx, dy)
        dot = (px - ax) * dx + (py - ay) * dy
        on_edge = np.where(
            length > 0,
            (np.abs(cross) <= _EDGE_EPS * length) & (dot >= -_EDGE_EPS) &
            (dot <= length * length + _EDGE_EPS),
            (px == ax) & (py == ay))
        on_boundary = on_edge.any(axis=1)

        straddles = (ay > py) != (by > py)
        with np.errstate(divide='ignore', invalid='ignore'):
            x_cross = ax + (py - ay) * dx / dy
        crossing = straddles & (px < x_cross)

        # Even-odd per polygon, then union over polygons
        inside = np.zeros(px.shape[0], dtype=bool)
        for poly_num in range(self._n_polys):
            mask = self._poly == poly_num
            parity = crossing[:, mask].sum(axis=1) % 2 == 1
            inside |= parity
        return inside | on_boundary

    def distance_many_km(self, lat, lon):
        """Minimum point-to-segment distance from one point to every
        edge, computed in a projection centered on the point."""
        origin = GeoPoint(float(lat), float(lon))
        ax, ay = project_many(self._ay, self._ax, origin)
        bx, by = project_many(self._by, self._bx, origin)
        dx = bx - ax
        dy = by - ay
        seg2 = dx * dx + dy * dy
        with np.errstate(divide='ignore', invalid='ignore'):
            t = np.where(seg2 > 0, -(ax * dx + ay * dy) / seg2, 0.0)
        t = np.clip(t, 0.0, 1.0)
        cx = ax + t * dx
        cy = ay + t * dy
        return float(np.sqrt(cx * cx + cy * cy).min()) / 1000.0

    def __eq__(self, other):
        return type(self) is type(other) and self.polygons == other.polygons

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return '<ZoneGeometry %d polygon(s)>' % (len(self.polygons), )


def contains(z, p):
    """Even-odd ray casting; holes are outside, boundary points inside.

    @type z: ZoneGeometry
    @type p: GeoPoint
    @rtype: bool
    """
    return bool(z.contains_many(np.array([p.lat]), np.array([p.lon]))[0])


def distance_to_boundary_km(z, p):
    """Distance from an outside point to the nearest point of the zone
    boundary, clamped to segment ends.

    @raises ContractError: if C{p} lies inside C{z}
    """
    if contains(z, p):
        raise ContractError('point (%r, %r) is inside the zone' %
                            (p.lat, p.lon))
    return z.distance_many_km(p.lat, p.lon)
