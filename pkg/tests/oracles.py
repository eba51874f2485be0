"""Independent reference implementations used to cross-check the library.

Everything here is written from the definitions, deliberately not sharing
code with the package: distances use the spherical law of cosines (or a
separately written haversine), the KNN oracle is a plain full scan with
explicit sorting, and gradients come from central finite differences.
"""

import math

EARTH_RADIUS_KM = 6371.0


def law_of_cosines_km(lat1, lon1, lat2, lon2):
    """Great-circle distance via the spherical law of cosines."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dl = math.radians(lon2 - lon1)
    c = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dl)
    return EARTH_RADIUS_KM * math.acos(min(1.0, max(-1.0, c)))


def haversine_km(lat1, lon1, lat2, lon2):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dphi = p2 - p1
    dlmb = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, a)))


def naive_knn(points, qlat, qlon, k, p, epsilon_km=1e-6):
    """Full-scan weighted KNN oracle.

    points: iterable of (lat, lon, value). k=None means all points. Ties at
    the k-th neighbor break on (distance, lat, lon, value), matching the
    documented library rule.
    """
    ranked = sorted(
        ((haversine_km(qlat, qlon, lat, lon), lat, lon, value)
         for lat, lon, value in points)
    )
    if k is None:
        k = len(ranked)
    chosen = ranked[: min(k, len(ranked))]
    if p > 0.0:
        coincident = [v for d, _, _, v in chosen if d <= epsilon_km]
        if coincident:
            return sum(coincident) / len(coincident)
    weights = [1.0 / max(d, epsilon_km) ** p for d, _, _, _ in chosen]
    total = sum(weights)
    return sum(w * v for w, (_, _, _, v) in zip(weights, chosen)) / total


def central_difference(f, x, i, h=1e-5):
    """d f / d x_i by central differences; f takes a flat list."""
    xp = list(x)
    xm = list(x)
    xp[i] += h
    xm[i] -= h
    return (f(xp) - f(xm)) / (2.0 * h)


def ols_slope_intercept(xs, ys):
    """Plain least squares line fit, written from the normal equations."""
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, my - slope * mx
