#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoloc/dataset.hpp"
#include "geoloc/ensemble.hpp"
#include "geoloc/synth.hpp"

namespace geoloc {

// ---- k-fold splitting ----

/// Random disjoint folds of sizes differing by at most one. fold_of[i] in [0, folds).
inline std::vector<std::uint32_t> kfold_split(std::size_t n, std::size_t folds, Rng& rng) {
    if (folds < 2) throw std::invalid_argument("kfold_split: need at least 2 folds");
    if (n < folds) throw std::invalid_argument("kfold_split: need n >= folds");
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<std::uint32_t> fold_of(n);
    const std::size_t base = n / folds, extra = n % folds;
    std::size_t at = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) fold_of[order[at++]] = static_cast<std::uint32_t>(f);
    }
    return fold_of;
}

// ---- metrics ----

inline double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

// ---- administrative-area matching ----

// Truth polygon for a sample at one level: the labeled polygon when the label
// is known to this table, otherwise the polygon containing the true location.
inline const Domain* truth_polygon(const AreaTable& table, const Sample& s, std::string* label_out = nullptr) {
    if (!s.area_label.empty()) {
        if (const Domain* d = table.polygon_for(s.area_label)) {
            if (label_out) *label_out = s.area_label;
            return d;
        }
    }
    for (const AreaRow& row : table.rows) {
        auto it = table.polygons.find(row.polygon_id);
        if (it != table.polygons.end() && it->second.contains(s.location)) {
            if (label_out) *label_out = row.label;
            return &it->second;
        }
    }
    return nullptr;
}

// -1: not evaluable (no polygon covers the truth), 0: miss, 1: match.
inline int area_match(const GeoPoint& predicted, const Sample& truth, const AreaTable& table) {
    const Domain* poly = truth_polygon(table, truth);
    if (!poly) return -1;
    return poly->contains(predicted) ? 1 : 0;
}

/// Label of the area containing p, empty when none does.
inline std::string area_label_at(const AreaTable& table, const GeoPoint& p) {
    for (const AreaRow& row : table.rows) {
        auto it = table.polygons.find(row.polygon_id);
        if (it != table.polygons.end() && it->second.contains(p)) return row.label;
    }
    return {};
}

// ---- cross-validation ----

struct CvConfig {
    std::size_t folds = 10;
    EnsembleConfig ensemble;           // scheme, classifier, J, grid, mc, seed unused (master seed below)
    double region_mass = 0.9;
    std::uint64_t seed = 0;
    bool country_mode = false;         // area accuracy only; no point-error metrics reported
    std::string weight_level;          // recompute weights per fold from this level's table

    void validate() const {
        if (folds < 2) throw std::invalid_argument("CvConfig: folds must be >= 2");
        if (!(region_mass > 0.0) || region_mass >= 1.0)
            throw std::invalid_argument("CvConfig: region mass must be in (0,1)");
    }
};

struct SampleResult {
    std::string id;
    std::uint32_t fold = 0;
    GeoPoint truth;
    GeoPoint predicted;
    double error_km = 0.0;
    bool covered = false;
    double oracle_error_km = std::nan("");
    std::map<std::string, int> area_match;  // level -> -1/0/1
};

struct CvReport {
    std::string model_name;
    std::string scheme_name;
    std::size_t n = 0;
    std::size_t folds = 0;
    double region_mass = 0.9;
    bool country_mode = false;
    std::vector<SampleResult> results;
    std::vector<double> fold_medians_km;

    double median_error_km() const {
        std::vector<double> e;
        for (const auto& r : results) e.push_back(r.error_km);
        return median(std::move(e));
    }
    double quartile_km(double q) const {
        std::vector<double> e;
        for (const auto& r : results) e.push_back(r.error_km);
        return quantile(std::move(e), q);
    }
    double coverage() const {
        if (results.empty()) return std::nan("");
        std::size_t c = 0;
        for (const auto& r : results) c += r.covered ? 1 : 0;
        return static_cast<double>(c) / static_cast<double>(results.size());
    }
    double oracle_median_km() const {
        std::vector<double> e;
        for (const auto& r : results)
            if (std::isfinite(r.oracle_error_km)) e.push_back(r.oracle_error_km);
        return median(std::move(e));
    }
    // match percentage per level; absent when no sample was evaluable
    std::map<std::string, double> area_match_pct() const {
        std::map<std::string, double> hits, totals;
        for (const auto& r : results) {
            for (const auto& [level, m] : r.area_match) {
                if (m < 0) continue;
                totals[level] += 1.0;
                hits[level] += m;
            }
        }
        std::map<std::string, double> out;
        for (const auto& [level, total] : totals) out[level] = 100.0 * hits[level] / total;
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json per_sample = nlohmann::json::array();
        for (const auto& r : results) {
            nlohmann::json jr{{"id", r.id},
                              {"fold", r.fold},
                              {"true_lat", r.truth.lat},
                              {"true_lon", r.truth.lon},
                              {"pred_lat", r.predicted.lat},
                              {"pred_lon", r.predicted.lon}};
            if (!country_mode) {
                jr["error_km"] = r.error_km;
                jr["covered"] = r.covered;
            }
            if (std::isfinite(r.oracle_error_km)) jr["oracle_error_km"] = r.oracle_error_km;
            if (!r.area_match.empty()) jr["area_match"] = r.area_match;
            per_sample.push_back(std::move(jr));
        }
        nlohmann::json j{{"model", model_name},
                         {"seeds", scheme_name},
                         {"n", n},
                         {"folds", folds},
                         {"samples", std::move(per_sample)}};
        if (!country_mode) {
            j["median_error_km"] = median_error_km();
            j["q25_error_km"] = quartile_km(0.25);
            j["q75_error_km"] = quartile_km(0.75);
            j["coverage"] = coverage();
            j["region_mass"] = region_mass;
            j["fold_medians_km"] = fold_medians_km;
        }
        const auto pct = area_match_pct();
        if (!pct.empty()) j["area_match_pct"] = pct;
        const double om = oracle_median_km();
        if (std::isfinite(om)) j["oracle_median_error_km"] = om;
        return j;
    }

    // one row in the tabular layout: Seeds, Model, ME, COV, then area levels
    std::string csv_header() const {
        std::string h = country_mode ? "seeds,model" : "seeds,model,me_km,cov_pct";
        for (const auto& [level, pct] : area_match_pct()) h += "," + level + "_pct";
        return h;
    }
    std::string csv_row() const {
        std::ostringstream out;
        out.precision(10);
        out << scheme_name << ',' << model_name;
        if (!country_mode) out << ',' << median_error_km() << ',' << 100.0 * coverage();
        for (const auto& [level, pct] : area_match_pct()) out << ',' << pct;
        return out.str();
    }
};

// Ten-fold protocol: per fold, train an ensemble on the other folds (weights
// recomputed from the training split when a weight level is configured) and
// evaluate every held-out sample. Errors pool across folds.
inline CvReport run_cv(const Dataset& ds, const Domain& domain, const CvConfig& config,
                       const std::map<std::string, AreaTable>& areas = {},
                       const std::vector<TaxonField>* oracle_fields = nullptr,
                       std::ostream* log = nullptr) {
    config.validate();
    const std::size_t n = ds.size();
    Rng fold_rng(derive_seed(config.seed, 0x636676ULL));
    const std::vector<std::uint32_t> fold_of = kfold_split(n, config.folds, fold_rng);

    {
        bool spread = false;
        for (std::size_t i = 1; i < n && !spread; ++i)
            spread = !(ds.samples[i].location == ds.samples[0].location);
        if (!spread) std::cerr << "warning: dataset has zero spatial spread; metrics are degenerate\n";
    }

    CvReport report;
    report.model_name = config.ensemble.classifier.kind_name();
    report.scheme_name = config.ensemble.scheme.mode_name();
    report.n = n;
    report.folds = config.folds;
    report.region_mass = config.region_mass;
    report.country_mode = config.country_mode;
    report.results.resize(n);

    const Grid eval_grid(domain, config.ensemble.grid_resolution_deg);
    std::optional<OraclePosterior> oracle;
    if (oracle_fields) oracle.emplace(*oracle_fields, eval_grid);

    for (std::size_t f = 0; f < config.folds; ++f) {
        Dataset train;
        train.p = ds.p;
        std::vector<std::size_t> test_idx;
        for (std::size_t i = 0; i < n; ++i) {
            if (fold_of[i] == f)
                test_idx.push_back(i);
            else
                train.samples.push_back(ds.samples[i]);
        }
        if (!config.weight_level.empty()) {
            auto it = areas.find(config.weight_level);
            if (it == areas.end())
                throw std::runtime_error("run_cv: no area table for weight level '" + config.weight_level + "'");
            compute_weights(train, it->second);
        }

        EnsembleConfig ens = config.ensemble;
        ens.seed = derive_seed(config.seed, 0x666f6cULL, f);
        std::optional<EnsembleModel> trained;
        try {
            trained.emplace(train_ensemble(train, domain, ens));
        } catch (const std::exception& e) {
            throw std::runtime_error("fold " + std::to_string(f) + ": " + e.what());
        }
        const EnsembleModel& model = *trained;

        std::vector<double> fold_errors(test_idx.size());
        parallel_for(test_idx.size(), [&](std::size_t t) {
            const Sample& s = ds.samples[test_idx[t]];
            SampleResult& r = report.results[test_idx[t]];
            r.id = s.id;
            r.fold = static_cast<std::uint32_t>(f);
            r.truth = s.location;
            const std::vector<double> surface = density_grid(model, s.features);
            const std::size_t best = argmax_cell(surface);
            r.predicted = model.grid.centers()[best];
            r.error_km = haversine(r.truth, r.predicted);
            fold_errors[t] = r.error_km;
            const PredictionRegion region = prediction_region(surface, model.grid, config.region_mass);
            std::vector<std::uint8_t> in_region(model.grid.size(), 0);
            for (std::uint32_t c : region.cells) in_region[c] = 1;
            std::int32_t cell = model.grid.cell_at(s.location);
            if (cell < 0) cell = static_cast<std::int32_t>(model.grid.nearest_cell(s.location));
            r.covered = in_region[static_cast<std::size_t>(cell)] != 0;
            for (const auto& [level, table] : areas) r.area_match[level] = area_match(r.predicted, s, table);
            if (oracle) {
                const GeoPoint op = oracle->argmax(s.features);
                r.oracle_error_km = haversine(s.location, op);
            }
        });
        report.fold_medians_km.push_back(median(fold_errors));
        if (log)
            *log << "fold " << f << ": trained on " << train.samples.size() << ", tested "
                 << test_idx.size() << ", median " << report.fold_medians_km.back() << " km\n";
    }
    return report;
}

// ---- area-classification baseline ----

// Spherical centroid of a polygon boundary: normalized mean of unit vectors
// sampled along the outer rings. Adequate for centroid-as-prediction.
inline GeoPoint polygon_centroid(const Domain& d, int samples_per_edge = 32) {
    double x = 0, y = 0, z = 0;
    std::size_t count = 0;
    const auto& rings = d.rings();
    for (std::size_t r = 0; r < rings.size(); ++r) {
        if (d.hole_flags()[r]) continue;
        const Ring& ring = rings[r];
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            for (int k = 0; k < samples_per_edge; ++k) {
                const double t = static_cast<double>(k) / samples_per_edge;
                const GeoPoint p{ring[i].lat + t * (ring[i + 1].lat - ring[i].lat),
                                 ring[i].lon + t * (ring[i + 1].lon - ring[i].lon)};
                const Vec3 u = unit_vector(p);
                x += u.x;
                y += u.y;
                z += u.z;
                ++count;
            }
        }
    }
    if (count == 0) throw std::invalid_argument("polygon_centroid: no outer ring");
    const double norm = std::sqrt(x * x + y * y + z * z);
    return GeoPoint{rad2deg(std::asin(z / norm)), rad2deg(std::atan2(y, x))};
}

struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<std::uint32_t>> counts;  // [true][predicted]

    nlohmann::json to_json() const { return {{"labels", labels}, {"counts", counts}}; }
};

inline ConfusionMatrix confusion_matrix(const std::vector<std::string>& labels,
                                        const std::vector<std::uint32_t>& truth,
                                        const std::vector<std::uint32_t>& predicted) {
    if (truth.size() != predicted.size())
        throw std::invalid_argument("confusion_matrix: label vectors differ in length");
    ConfusionMatrix cm;
    cm.labels = labels;
    cm.counts.assign(labels.size(), std::vector<std::uint32_t>(labels.size(), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts[truth[i]][predicted[i]];
    return cm;
}

struct AreaBaselineReport {
    double accuracy = 0.0;          // fraction of held-out samples with the right area
    double median_error_km = 0.0;   // distance to the predicted area's centroid
    ConfusionMatrix confusion;

    nlohmann::json to_json() const {
        return {{"model", "area_dnn"},
                {"seeds", "none"},
                {"accuracy", accuracy},
                {"median_error_km", median_error_km},
                {"confusion", confusion.to_json()}};
    }
};

// The area-classification baseline: a net trained directly on area labels;
// the prediction is the predicted area's polygon centroid. Same folds
// protocol as run_cv; no prediction regions.
inline AreaBaselineReport area_dnn_baseline(const Dataset& ds, const AreaTable& areas,
                                            const ClassifierSpec& cspec, std::size_t folds, std::uint64_t seed) {
    const std::size_t n = ds.size();
    std::vector<std::string> labels;
    for (const AreaRow& row : areas.rows) labels.push_back(row.label);
    std::map<std::string, std::uint32_t> label_idx;
    for (std::size_t i = 0; i < labels.size(); ++i) label_idx[labels[i]] = static_cast<std::uint32_t>(i);

    std::vector<std::uint32_t> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = ds.samples[i];
        auto it = label_idx.find(s.area_label);
        if (it == label_idx.end())
            throw std::runtime_error("area_dnn_baseline: sample '" + s.id + "' lacks a usable area label");
        truth[i] = it->second;
    }
    std::map<std::uint32_t, GeoPoint> centroids;
    for (const AreaRow& row : areas.rows) {
        auto it = areas.polygons.find(row.polygon_id);
        if (it == areas.polygons.end())
            throw std::runtime_error("area_dnn_baseline: no polygon for area '" + row.label + "'");
        centroids[label_idx[row.label]] = polygon_centroid(it->second);
    }

    Rng fold_rng(derive_seed(seed, 0x636676ULL));
    const std::vector<std::uint32_t> fold_of = kfold_split(n, folds, fold_rng);
    std::vector<std::uint32_t> predicted(n);
    std::vector<double> errors(n);

    for (std::size_t f = 0; f < folds; ++f) {
        auto train = std::make_shared<FeatureMatrix>();
        train->p = ds.p;
        std::vector<std::uint32_t> train_labels;
        std::vector<double> train_weights;
        std::vector<std::size_t> test_idx;
        // label space: areas present in this training split, ascending
        std::vector<std::int32_t> class_of(labels.size(), -1);
        for (std::size_t i = 0; i < n; ++i)
            if (fold_of[i] != f) class_of[truth[i]] = 0;
        std::vector<std::uint32_t> class_to_label;
        for (std::size_t a = 0; a < labels.size(); ++a) {
            if (class_of[a] == 0) {
                class_of[a] = static_cast<std::int32_t>(class_to_label.size());
                class_to_label.push_back(static_cast<std::uint32_t>(a));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (fold_of[i] == f) {
                test_idx.push_back(i);
            } else {
                train->rows.push_back(ds.samples[i].features);
                train_labels.push_back(static_cast<std::uint32_t>(class_of[truth[i]]));
                train_weights.push_back(ds.samples[i].weight);
            }
        }
        const auto clf = fit_classifier(cspec, train, train_labels, train_weights, class_to_label.size(),
                                        derive_seed(seed, 0x61646eULL, f));
        parallel_for(test_idx.size(), [&](std::size_t t) {
            const std::size_t i = test_idx[t];
            const std::vector<double> q = clf->predict_proba(ds.samples[i].features);
            std::size_t best = 0;
            for (std::size_t c = 1; c < q.size(); ++c)
                if (q[c] > q[best]) best = c;
            predicted[i] = class_to_label[best];
            errors[i] = haversine(ds.samples[i].location, centroids.at(predicted[i]));
        });
    }

    AreaBaselineReport report;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += predicted[i] == truth[i] ? 1 : 0;
    report.accuracy = static_cast<double>(hits) / static_cast<double>(n);
    report.median_error_km = median(errors);
    report.confusion = confusion_matrix(labels, truth, predicted);
    return report;
}

// ---- kernel-smoothed error field ----

struct ErrorField {
    std::vector<GeoPoint> centers;
    std::vector<double> d_east_km;    // mean displacement, true -> predicted
    std::vector<double> d_north_km;
    std::vector<double> mean_error_km;
    std::vector<std::uint8_t> valid;  // 0 where total kernel weight is negligible
};

// Gaussian-kernel smoothing of prediction displacements over the grid.
// Displacements use the local east/north tangent at the true location.
inline ErrorField error_field(const std::vector<SampleResult>& results, double bandwidth_km, const Grid& grid) {
    if (results.empty()) throw std::invalid_argument("error_field: no results");
    if (!(bandwidth_km > 0)) throw std::invalid_argument("error_field: bandwidth must be positive");
    const std::size_t n = results.size();
    std::vector<double> east(n), north(n), err(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SampleResult& r = results[i];
        east[i] = kEarthRadiusKm * deg2rad(r.predicted.lon - r.truth.lon) * std::cos(deg2rad(r.truth.lat));
        north[i] = kEarthRadiusKm * deg2rad(r.predicted.lat - r.truth.lat);
        err[i] = r.error_km;
    }
    ErrorField field;
    field.centers = grid.centers();
    const std::size_t cells = grid.size();
    field.d_east_km.assign(cells, 0.0);
    field.d_north_km.assign(cells, 0.0);
    field.mean_error_km.assign(cells, 0.0);
    field.valid.assign(cells, 0);
    std::vector<double> total(cells, 0.0);
    const double inv_2h2 = 1.0 / (2.0 * bandwidth_km * bandwidth_km);
    parallel_for(cells, [&](std::size_t c) {
        const GeoPoint& g = grid.centers()[c];
        double w_sum = 0, e_sum = 0, n_sum = 0, err_sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = haversine(g, results[i].truth);
            const double w = std::exp(-d * d * inv_2h2);
            w_sum += w;
            e_sum += w * east[i];
            n_sum += w * north[i];
            err_sum += w * err[i];
        }
        total[c] = w_sum;
        if (w_sum > 0) {
            field.d_east_km[c] = e_sum / w_sum;
            field.d_north_km[c] = n_sum / w_sum;
            field.mean_error_km[c] = err_sum / w_sum;
        }
    });
    const double max_total = *std::max_element(total.begin(), total.end());
    for (std::size_t c = 0; c < cells; ++c) field.valid[c] = total[c] >= 1e-6 * max_total ? 1 : 0;
    return field;
}

}  // namespace geoloc
