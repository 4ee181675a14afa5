#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoloc/random.hpp"

namespace geoloc {

// IUGG mean Earth radius; fixed so distances are comparable across builds.
inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * (kPi / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / kPi); }

struct GeoPoint {
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, [-180, 180)

    bool operator==(const GeoPoint& o) const { return lat == o.lat && lon == o.lon; }
};

inline bool valid_point(const GeoPoint& p) {
    return std::isfinite(p.lat) && std::isfinite(p.lon) &&
           p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon < 180.0;
}

/// Great-circle distance in km.
inline double haversine(const GeoPoint& a, const GeoPoint& b) {
    const double lat1 = deg2rad(a.lat), lat2 = deg2rad(b.lat);
    const double sdlat = std::sin(0.5 * (lat2 - lat1));
    const double sdlon = std::sin(0.5 * deg2rad(b.lon - a.lon));
    double h = sdlat * sdlat + std::cos(lat1) * std::cos(lat2) * sdlon * sdlon;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

// Unit vector on the sphere. Nearest-seed scans maximize the dot product,
// which is monotone-equivalent to minimizing great-circle distance.
struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 unit_vector(const GeoPoint& p) {
    const double lat = deg2rad(p.lat), lon = deg2rad(p.lon);
    const double c = std::cos(lat);
    return {c * std::cos(lon), c * std::sin(lon), std::sin(lat)};
}

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

struct BBox {
    double lat_min = 0, lat_max = 0, lon_min = 0, lon_max = 0;

    bool contains(const GeoPoint& p) const {
        return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
    }
};

using Ring = std::vector<GeoPoint>;  // closed: first vertex == last

namespace detail {

inline bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    if (cross != 0.0) return false;
    return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
           p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat);
}

// Even-odd ray crossing in the lon/lat plane. Half-open vertex rule.
inline bool crossings_odd(const Ring& ring, const GeoPoint& p) {
    bool odd = false;
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        const GeoPoint& a = ring[i];
        const GeoPoint& b = ring[j];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
            if (p.lon < x) odd = !odd;
        }
    }
    return odd;
}

// Spherical area of the planar-edge region enclosed by a ring, via the exact
// line integral of sin(lat) d(lon) along each segment. Returns km^2, unsigned.
inline double ring_area_km2(const Ring& ring) {
    double acc = 0.0;  // integral of cos(lat) over the enclosed region, rad^2
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double lam1 = deg2rad(ring[i].lon), phi1 = deg2rad(ring[i].lat);
        const double lam2 = deg2rad(ring[i + 1].lon), phi2 = deg2rad(ring[i + 1].lat);
        const double dlam = lam2 - lam1, dphi = phi2 - phi1;
        const double avg_sin = dphi == 0.0 ? std::sin(phi1) : (std::cos(phi1) - std::cos(phi2)) / dphi;
        acc += dlam * avg_sin;
    }
    return std::abs(acc) * kEarthRadiusKm * kEarthRadiusKm;
}

}  // namespace detail

// Spatial domain: one or more polygonal rings (outer rings plus holes) in
// lon/lat coordinates. Membership uses the even-odd rule with planar edges;
// points exactly on an edge count as inside. Antimeridian-crossing domains
// are not supported.
class Domain {
public:
    Domain(std::vector<Ring> rings, std::vector<bool> hole_flags)
        : rings_(std::move(rings)), hole_(std::move(hole_flags)) {
        if (rings_.empty()) throw std::invalid_argument("Domain: no rings");
        if (hole_.size() != rings_.size()) throw std::invalid_argument("Domain: ring/flag count mismatch");
        bool any_outer = false;
        bbox_ = {90.0, -90.0, 180.0, -180.0};
        area_km2_ = 0.0;
        for (std::size_t r = 0; r < rings_.size(); ++r) {
            const Ring& ring = rings_[r];
            if (ring.size() < 4) throw std::invalid_argument("Domain: ring with fewer than 3 edges");
            if (!(ring.front() == ring.back())) throw std::invalid_argument("Domain: ring not closed");
            for (const GeoPoint& p : ring) {
                if (!valid_point(p)) throw std::invalid_argument("Domain: vertex out of bounds");
                bbox_.lat_min = std::min(bbox_.lat_min, p.lat);
                bbox_.lat_max = std::max(bbox_.lat_max, p.lat);
                bbox_.lon_min = std::min(bbox_.lon_min, p.lon);
                bbox_.lon_max = std::max(bbox_.lon_max, p.lon);
            }
            const double a = detail::ring_area_km2(ring);
            area_km2_ += hole_[r] ? -a : a;
            any_outer = any_outer || !hole_[r];
        }
        if (!any_outer) throw std::invalid_argument("Domain: no outer ring");
        if (!(area_km2_ > 0.0)) throw std::invalid_argument("Domain: nonpositive area");
    }

    explicit Domain(Ring outer) : Domain(std::vector<Ring>{std::move(outer)}, {false}) {}

    bool contains(const GeoPoint& p) const {
        if (!bbox_.contains(p)) return false;
        bool odd = false;
        for (const Ring& ring : rings_) {
            for (std::size_t i = 0; i + 1 < ring.size(); ++i)
                if (detail::on_segment(p, ring[i], ring[i + 1])) return true;
            if (detail::crossings_odd(ring, p)) odd = !odd;
        }
        return odd;
    }

    const std::vector<Ring>& rings() const { return rings_; }
    const std::vector<bool>& hole_flags() const { return hole_; }
    const BBox& bbox() const { return bbox_; }
    double area_km2() const { return area_km2_; }

private:
    std::vector<Ring> rings_;
    std::vector<bool> hole_;
    BBox bbox_;
    double area_km2_ = 0.0;
};

inline bool point_in_domain(const Domain& d, const GeoPoint& s) { return d.contains(s); }

// Uniform sampling per unit of spherical area: rejection on the bbox with the
// sin(lat) correction. Deterministic given the generator state.
inline std::vector<GeoPoint> sample_uniform(const Domain& d, Rng& rng, std::size_t count) {
    if (count < 1) throw std::invalid_argument("sample_uniform: count must be >= 1");
    const BBox& bb = d.bbox();
    const double z_lo = std::sin(deg2rad(bb.lat_min));
    const double z_hi = std::sin(deg2rad(bb.lat_max));
    std::vector<GeoPoint> out;
    out.reserve(count);
    std::size_t attempts = 0;
    while (out.size() < count) {
        const double lon = rng.uniform(bb.lon_min, bb.lon_max);
        const double lat = rad2deg(std::asin(rng.uniform(z_lo, z_hi)));
        ++attempts;
        GeoPoint p{lat, lon};
        if (d.contains(p)) out.push_back(p);
        if (attempts >= 50000 && static_cast<double>(out.size()) < 1e-4 * static_cast<double>(attempts))
            throw std::runtime_error(
                "sample_uniform: acceptance rate below 1e-4 after " + std::to_string(attempts) +
                " draws; domain is degenerate relative to its bounding box");
    }
    return out;
}

enum class SeedMetric : std::uint8_t {
    great_circle = 0,  // nearest seed by great-circle distance
    planar = 1,        // nearest seed by Euclidean distance in lon/lat degrees
};

// One random Voronoi partition: K seeds, per-tile areas in km^2 estimated by
// Monte Carlo, and the nearest-seed assignment rule.
struct VoronoiPartition {
    std::vector<GeoPoint> seeds;
    std::vector<Vec3> seed_units;  // cached unit vectors, rebuilt after load
    std::vector<double> areas_km2;
    std::uint32_t mc_points = 0;
    SeedMetric metric = SeedMetric::great_circle;

    std::size_t tile_count() const { return seeds.size(); }

    void rebuild_units() {
        seed_units.resize(seeds.size());
        for (std::size_t i = 0; i < seeds.size(); ++i) seed_units[i] = unit_vector(seeds[i]);
    }
};

/// Index of the nearest seed; ties go to the lowest seed index.
inline std::uint32_t assign_tile(const VoronoiPartition& p, const GeoPoint& s) {
    const std::size_t k = p.seeds.size();
    std::uint32_t best = 0;
    if (p.metric == SeedMetric::planar) {
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k; ++i) {
            const double dlat = s.lat - p.seeds[i].lat;
            const double dlon = s.lon - p.seeds[i].lon;
            const double d = dlat * dlat + dlon * dlon;
            if (d < best_d) {
                best_d = d;
                best = static_cast<std::uint32_t>(i);
            }
        }
        return best;
    }
    const Vec3 u = unit_vector(s);
    double best_dot = -2.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double d = dot(u, p.seed_units[i]);
        if (d > best_dot) {
            best_dot = d;
            best = static_cast<std::uint32_t>(i);
        }
    }
    return best;
}

// Tile areas by Monte Carlo: A_k = domain area * (hits in tile k / mc_points).
// Tiles with zero hits get the floor epsilon = area / mc_points so downstream
// density ratios stay finite; occupied tiles always have hits in practice.
inline std::vector<double> estimate_areas(const Domain& d, const VoronoiPartition& p,
                                          std::uint32_t mc_points, Rng& rng) {
    const std::size_t k = p.seeds.size();
    if (mc_points < 10 * k)
        throw std::invalid_argument("estimate_areas: mc_points must be at least 10x the seed count");
    std::vector<std::uint64_t> hits(k, 0);
    const std::vector<GeoPoint> pts = sample_uniform(d, rng, mc_points);
    for (const GeoPoint& s : pts) ++hits[assign_tile(p, s)];
    const double total = d.area_km2();
    std::vector<double> areas(k);
    for (std::size_t i = 0; i < k; ++i) {
        areas[i] = hits[i] == 0 ? total / static_cast<double>(mc_points)
                                : total * (static_cast<double>(hits[i]) / static_cast<double>(mc_points));
    }
    return areas;
}

inline VoronoiPartition make_partition(const Domain& d, std::size_t k, Rng& rng,
                                       std::uint32_t mc_points,
                                       SeedMetric metric = SeedMetric::great_circle) {
    if (k < 2) throw std::invalid_argument("make_partition: need at least 2 seeds");
    VoronoiPartition p;
    p.seeds = sample_uniform(d, rng, k);
    p.metric = metric;
    p.mc_points = mc_points;
    p.rebuild_units();
    p.areas_km2 = estimate_areas(d, p, mc_points, rng);
    return p;
}

// Regular lon/lat grid over the domain, centers restricted to the domain.
// Cell index order is lat ascending then lon ascending; argmax tie-breaking
// relies on this order. Cell areas are exact spherical lat/lon-rectangle areas.
class Grid {
public:
    Grid() = default;

    Grid(const Domain& d, double resolution_deg) : res_(resolution_deg) {
        if (!(resolution_deg > 0)) throw std::invalid_argument("Grid: resolution must be positive");
        const BBox& bb = d.bbox();
        lat0_ = bb.lat_min;
        lon0_ = bb.lon_min;
        rows_ = static_cast<std::size_t>(std::ceil((bb.lat_max - bb.lat_min) / res_));
        cols_ = static_cast<std::size_t>(std::ceil((bb.lon_max - bb.lon_min) / res_));
        rows_ = std::max<std::size_t>(rows_, 1);
        cols_ = std::max<std::size_t>(cols_, 1);
        cell_of_rc_.assign(rows_ * cols_, -1);
        const double r2 = kEarthRadiusKm * kEarthRadiusKm;
        for (std::size_t i = 0; i < rows_; ++i) {
            const double lat_b = lat0_ + res_ * static_cast<double>(i);
            const double lat_c = lat_b + 0.5 * res_;
            const double strip = r2 * deg2rad(res_) *
                                 (std::sin(deg2rad(std::min(lat_b + res_, 90.0))) - std::sin(deg2rad(lat_b)));
            for (std::size_t j = 0; j < cols_; ++j) {
                const GeoPoint c{lat_c, lon0_ + res_ * (static_cast<double>(j) + 0.5)};
                if (!d.contains(c)) continue;
                cell_of_rc_[i * cols_ + j] = static_cast<std::int32_t>(centers_.size());
                centers_.push_back(c);
                areas_.push_back(strip);
            }
        }
        if (centers_.empty()) throw std::runtime_error("Grid: no cell centers fall inside the domain");
    }

    double resolution() const { return res_; }
    std::size_t size() const { return centers_.size(); }
    const std::vector<GeoPoint>& centers() const { return centers_; }
    const std::vector<double>& cell_areas_km2() const { return areas_; }
    double total_area_km2() const {
        double t = 0;
        for (double a : areas_) t += a;
        return t;
    }

    /// Cell containing p, or -1 when p's cell center fell outside the domain.
    std::int32_t cell_at(const GeoPoint& p) const {
        const double fi = (p.lat - lat0_) / res_;
        const double fj = (p.lon - lon0_) / res_;
        if (fi < 0 || fj < 0) return -1;
        const std::size_t i = std::min(static_cast<std::size_t>(fi), rows_ - 1);
        const std::size_t j = std::min(static_cast<std::size_t>(fj), cols_ - 1);
        return cell_of_rc_[i * cols_ + j];
    }

    /// Nearest in-domain cell center; fallback for boundary samples.
    std::size_t nearest_cell(const GeoPoint& p) const {
        const Vec3 u = unit_vector(p);
        std::size_t best = 0;
        double best_dot = -2.0;
        for (std::size_t c = 0; c < centers_.size(); ++c) {
            const double dp = dot(u, unit_vector(centers_[c]));
            if (dp > best_dot) {
                best_dot = dp;
                best = c;
            }
        }
        return best;
    }

private:
    double res_ = 0, lat0_ = 0, lon0_ = 0;
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<GeoPoint> centers_;
    std::vector<double> areas_;
    std::vector<std::int32_t> cell_of_rc_;
};

}  // namespace geoloc
