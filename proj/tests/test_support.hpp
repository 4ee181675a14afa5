#pragma once

// Shared fixtures and brute-force oracles for the test suites.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "geoloc/dataset.hpp"
#include "geoloc/geometry.hpp"
#include "geoloc/knn.hpp"

namespace testsupport {

using namespace geoloc;

inline Ring box_ring(double lat_min, double lon_min, double lat_max, double lon_max) {
    return Ring{{lat_min, lon_min}, {lat_min, lon_max}, {lat_max, lon_max}, {lat_max, lon_min}, {lat_min, lon_min}};
}

inline Domain box_domain(double lat_min, double lon_min, double lat_max, double lon_max) {
    return Domain(box_ring(lat_min, lon_min, lat_max, lon_max));
}

/// Exact spherical area of a lat/lon box, the analytic oracle for box domains.
inline double box_area_km2(double lat_min, double lon_min, double lat_max, double lon_max) {
    return kEarthRadiusKm * kEarthRadiusKm * deg2rad(lon_max - lon_min) *
           (std::sin(deg2rad(lat_max)) - std::sin(deg2rad(lat_min)));
}

inline std::string data_file(const std::string& name) { return std::string(GEOLOC_DATA_DIR) + "/" + name; }

// brute-force nearest seed by haversine, the oracle for assign_tile
inline std::uint32_t nearest_seed_bruteforce(const std::vector<GeoPoint>& seeds, const GeoPoint& s) {
    std::uint32_t best = 0;
    double best_d = haversine(s, seeds[0]);
    for (std::size_t i = 1; i < seeds.size(); ++i) {
        const double d = haversine(s, seeds[i]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::uint32_t>(i);
        }
    }
    return best;
}

// exhaustive-scan KNN oracle mirroring the documented prediction rule
inline std::vector<double> knn_bruteforce(const FeatureMatrix& data, const std::vector<std::uint32_t>& labels,
                                          const std::vector<double>& weights, std::size_t n_classes, int k,
                                          const SparseVec& x) {
    std::vector<std::pair<double, std::uint32_t>> dist;
    for (std::size_t i = 0; i < data.rows.size(); ++i)
        dist.emplace_back(jaccard_distance(x, data.rows[i]), static_cast<std::uint32_t>(i));
    std::sort(dist.begin(), dist.end());
    const std::size_t use = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
    std::vector<double> proba(n_classes, 0.0);
    for (std::size_t i = 0; i < use; ++i) proba[labels[dist[i].second]] += weights[dist[i].second];
    double total = 0.0;
    for (double v : proba) total += v;
    for (double& v : proba) v /= total;
    return proba;
}

// unique temp directory, removed on destruction
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "geoloc_test_XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
        path_ = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return path_ + "/" + name; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

}  // namespace testsupport
