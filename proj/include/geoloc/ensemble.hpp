#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoloc/classifiers.hpp"
#include "geoloc/dataset.hpp"
#include "geoloc/geojson.hpp"
#include "geoloc/geometry.hpp"
#include "geoloc/parallel.hpp"
#include "geoloc/random.hpp"

namespace geoloc {

// How many Voronoi seeds each partition draws, as a fraction of the training
// sample count: coarse 5%, fine 50%, or mixed (5%..50% drawn per partition).
struct PartitionScheme {
    enum class Mode : std::uint8_t { coarse = 0, fine = 1, mixed = 2 };

    Mode mode = Mode::mixed;
    double fraction = 0.05;            // coarse/fine
    std::vector<double> fractions;     // mixed choices

    static PartitionScheme coarse(double fraction = 0.05) { return {Mode::coarse, fraction, {}}; }
    static PartitionScheme fine(double fraction = 0.50) { return {Mode::fine, fraction, {}}; }
    static PartitionScheme mixed() {
        PartitionScheme s{Mode::mixed, 0.0, {}};
        for (int i = 1; i <= 10; ++i) s.fractions.push_back(0.05 * i);
        return s;
    }

    void validate() const {
        const auto check = [](double f) {
            if (!(f > 0.0) || f > 1.0) throw std::invalid_argument("PartitionScheme: fraction must be in (0,1]");
        };
        if (mode == Mode::mixed) {
            if (fractions.empty()) throw std::invalid_argument("PartitionScheme: mixed needs fractions");
            for (double f : fractions) check(f);
        } else {
            check(fraction);
        }
    }

    /// Seed count for one new partition over n training samples.
    std::size_t seed_count(std::size_t n, Rng& rng) const {
        double f = fraction;
        if (mode == Mode::mixed) f = fractions[rng.next_below(fractions.size())];
        const auto k = static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
        return std::max<std::size_t>(2, k);
    }

    std::string mode_name() const {
        switch (mode) {
            case Mode::coarse: return "coarse";
            case Mode::fine: return "fine";
            case Mode::mixed: return "mixed";
        }
        return "?";
    }

    static PartitionScheme from_name(const std::string& name) {
        if (name == "coarse") return coarse();
        if (name == "fine") return fine();
        if (name == "mixed") return mixed();
        throw std::invalid_argument("unknown partition scheme '" + name + "'");
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"mode", mode_name()}};
        if (mode == Mode::mixed)
            j["fractions"] = fractions;
        else
            j["fraction"] = fraction;
        return j;
    }

    static PartitionScheme from_json(const nlohmann::json& j) {
        PartitionScheme s = from_name(j.at("mode").get<std::string>());
        if (j.contains("fraction")) s.fraction = j["fraction"].get<double>();
        if (j.contains("fractions")) s.fractions = j["fractions"].get<std::vector<double>>();
        s.validate();
        return s;
    }
};

// One partition/classifier pair. tile_to_class maps a tile index to the
// classifier's class index, -1 for tiles that held no training sample.
struct EnsembleMember {
    VoronoiPartition partition;
    std::vector<std::int32_t> tile_to_class;
    std::unique_ptr<Classifier> classifier;
    std::vector<std::uint32_t> cell_tile;  // grid cell -> tile, fixed at build time
};

struct EnsembleConfig {
    PartitionScheme scheme = PartitionScheme::mixed();
    ClassifierSpec classifier = ClassifierSpec::make_deep_net();
    std::uint32_t members = 50;
    double grid_resolution_deg = 0.25;
    std::uint32_t mc_points = 100000;
    SeedMetric metric = SeedMetric::great_circle;
    bool normalize_by_members = true;  // divide the aggregate by J so it integrates to ~1
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return {{"scheme", scheme.to_json()},
                {"classifier", classifier.to_json()},
                {"members", members},
                {"grid_resolution_deg", grid_resolution_deg},
                {"mc_points", mc_points},
                {"metric", metric == SeedMetric::planar ? "planar" : "great_circle"},
                {"normalize_by_members", normalize_by_members},
                {"seed", seed}};
    }

    static EnsembleConfig from_json(const nlohmann::json& j) {
        EnsembleConfig c;
        if (j.contains("scheme")) c.scheme = PartitionScheme::from_json(j["scheme"]);
        if (j.contains("classifier")) c.classifier = ClassifierSpec::from_json(j["classifier"]);
        c.members = j.value("members", c.members);
        c.grid_resolution_deg = j.value("grid_resolution_deg", c.grid_resolution_deg);
        c.mc_points = j.value("mc_points", c.mc_points);
        if (j.value("metric", "great_circle") == std::string("planar")) c.metric = SeedMetric::planar;
        c.normalize_by_members = j.value("normalize_by_members", true);
        c.seed = j.value("seed", c.seed);
        return c;
    }
};

// The trained geolocation model: J (partition, classifier) pairs over a fixed
// domain and evaluation grid. Immutable once trained; queries are thread-safe.
struct EnsembleModel {
    Domain domain;
    Grid grid;
    EnsembleConfig config;
    std::uint32_t p = 0;
    std::vector<EnsembleMember> members;
    std::shared_ptr<const FeatureMatrix> shared_knn_data;  // set when members are knn

    std::size_t member_count() const { return members.size(); }
};

struct MemberDiagnostics {
    std::size_t seed_count = 0;
    std::size_t occupied_tiles = 0;
    int redraws = 0;
    double final_loss = 0.0;  // nets only
};

// Trains the full ensemble: per member, draw a partition, label training
// samples by tile, drop empty tiles from the label space, fit the classifier
// with sample weights, and pre-assign grid cells to tiles. Members run in
// parallel on streams derived from (seed, member), so any thread count gives
// the same model. Partitions with fewer than two occupied tiles are redrawn
// (at most 10 times each).
inline EnsembleModel train_ensemble(const Dataset& ds, const Domain& domain, const EnsembleConfig& config,
                                    std::vector<MemberDiagnostics>* diagnostics = nullptr) {
    if (ds.size() < 2) throw std::invalid_argument("train_ensemble: need at least 2 training samples");
    if (config.members < 1) throw std::invalid_argument("train_ensemble: need at least 1 member");
    config.scheme.validate();
    config.classifier.validate();

    EnsembleModel model{domain, Grid(domain, config.grid_resolution_deg), config, ds.p, {}, nullptr};
    model.members.resize(config.members);
    if (diagnostics) diagnostics->resize(config.members);

    const auto data = feature_matrix(ds);
    std::vector<double> weights(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) weights[i] = ds.samples[i].weight;
    const std::size_t n = ds.size();
    const Grid& grid = model.grid;

    parallel_for(config.members, [&](std::size_t j) {
        Rng rng(derive_seed(config.seed, 0x656e73ULL, j));
        VoronoiPartition partition;
        std::vector<std::uint32_t> tile_of(n);
        std::vector<std::int32_t> tile_to_class;
        std::size_t occupied = 0;
        int redraws = 0;
        for (;; ++redraws) {
            if (redraws > 10)
                throw std::runtime_error("member " + std::to_string(j) +
                                         ": partition degenerate (single occupied tile) after 10 redraws");
            const std::size_t k = config.scheme.seed_count(n, rng);
            partition = make_partition(domain, k, rng, config.mc_points, config.metric);
            tile_to_class.assign(k, -1);
            for (std::size_t i = 0; i < n; ++i) {
                tile_of[i] = assign_tile(partition, ds.samples[i].location);
                tile_to_class[tile_of[i]] = 0;
            }
            occupied = 0;
            for (auto& t : tile_to_class)
                if (t == 0) t = static_cast<std::int32_t>(occupied++);
            if (occupied >= 2) break;
        }

        std::vector<std::uint32_t> labels(n);
        for (std::size_t i = 0; i < n; ++i)
            labels[i] = static_cast<std::uint32_t>(tile_to_class[tile_of[i]]);

        NetFitInfo fit_info;
        std::unique_ptr<Classifier> clf;
        try {
            clf = fit_classifier(config.classifier, data, labels, weights, occupied,
                                 derive_seed(config.seed, 0x666974ULL, j), &fit_info);
        } catch (const NetDivergenceError& e) {
            throw std::runtime_error("member " + std::to_string(j) + ": " + e.what());
        }

        std::vector<std::uint32_t> cell_tile(grid.size());
        for (std::size_t c = 0; c < grid.size(); ++c) cell_tile[c] = assign_tile(partition, grid.centers()[c]);

        if (diagnostics) {
            auto& d = (*diagnostics)[j];
            d.seed_count = partition.tile_count();
            d.occupied_tiles = occupied;
            d.redraws = redraws;
            d.final_loss = fit_info.epoch_losses.empty() ? 0.0 : fit_info.epoch_losses.back();
        }
        model.members[j] = EnsembleMember{std::move(partition), std::move(tile_to_class), std::move(clf),
                                          std::move(cell_tile)};
    });

    if (config.classifier.kind == ClassifierSpec::Kind::knn) model.shared_knn_data = data;
    return model;
}

// The aggregated predictive density at one location, per km^2:
// (1/J) sum_j q_j,h_j(s)(x) / A_j,h_j(s). Unoccupied tiles contribute zero.
// The 1/J factor (config.normalize_by_members) makes the surface integrate
// to ~1; point predictions and regions are invariant to it.
inline double density(const EnsembleModel& m, const SparseVec& x, const GeoPoint& s) {
    double acc = 0.0;
    for (const EnsembleMember& member : m.members) {
        const std::uint32_t tile = assign_tile(member.partition, s);
        const std::int32_t cls = member.tile_to_class[tile];
        if (cls < 0) continue;
        const std::vector<double> q = member.classifier->predict_proba(x);
        acc += q[static_cast<std::size_t>(cls)] / member.partition.areas_km2[tile];
    }
    if (m.config.normalize_by_members) acc /= static_cast<double>(m.members.size());
    return acc;
}

/// Density evaluated at every grid cell center (one predict_proba per member).
inline std::vector<double> density_grid(const EnsembleModel& m, const SparseVec& x) {
    std::vector<double> surface(m.grid.size(), 0.0);
    for (const EnsembleMember& member : m.members) {
        const std::vector<double> q = member.classifier->predict_proba(x);
        for (std::size_t c = 0; c < surface.size(); ++c) {
            const std::uint32_t tile = member.cell_tile[c];
            const std::int32_t cls = member.tile_to_class[tile];
            if (cls >= 0) surface[c] += q[static_cast<std::size_t>(cls)] / member.partition.areas_km2[tile];
        }
    }
    if (m.config.normalize_by_members) {
        const double inv = 1.0 / static_cast<double>(m.members.size());
        for (double& v : surface) v *= inv;
    }
    return surface;
}

/// Index of the maximal cell; ties go to the lowest cell index.
inline std::size_t argmax_cell(const std::vector<double>& surface) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < surface.size(); ++c)
        if (surface[c] > surface[best]) best = c;
    return best;
}

inline GeoPoint geolocate(const EnsembleModel& m, const SparseVec& x) {
    const std::vector<double> surface = density_grid(m, x);
    return m.grid.centers()[argmax_cell(surface)];
}

// Highest-density prediction region: cells in descending density order until
// the renormalized mass reaches the target. Equal-density cells are taken in
// ascending index order, so regions nest as the target mass grows.
struct PredictionRegion {
    double target_mass = 0.0;
    std::vector<std::uint32_t> cells;  // descending density
    double achieved_mass = 0.0;
    double threshold = 0.0;
};

inline PredictionRegion prediction_region(const std::vector<double>& surface, const Grid& grid, double mass) {
    if (!(mass > 0.0)) throw std::invalid_argument("prediction_region: mass must be in (0,1]");
    const std::size_t n = surface.size();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (surface[a] != surface[b]) return surface[a] > surface[b];
        return a < b;
    });
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) total += surface[c] * grid.cell_areas_km2()[c];

    PredictionRegion region;
    region.target_mass = mass;
    if (mass >= 1.0 || total <= 0.0) {
        region.cells = std::move(order);
        region.achieved_mass = 1.0;
        region.threshold = region.cells.empty() ? 0.0 : surface[region.cells.back()];
        return region;
    }
    double cum = 0.0;
    for (std::uint32_t c : order) {
        region.cells.push_back(c);
        cum += surface[c] * grid.cell_areas_km2()[c];
        if (cum >= mass * total) break;
    }
    region.achieved_mass = cum / total;
    region.threshold = surface[region.cells.back()];
    return region;
}

inline PredictionRegion prediction_region(const EnsembleModel& m, const SparseVec& x, double mass) {
    return prediction_region(density_grid(m, x), m.grid, mass);
}

// ---- model container (versioned binary file) ----

namespace detail {

inline void save_partition(BinaryWriter& w, const VoronoiPartition& p) {
    w.u64(p.seeds.size());
    for (const GeoPoint& s : p.seeds) {
        w.f64(s.lat);
        w.f64(s.lon);
    }
    w.vec(p.areas_km2);
    w.u32(p.mc_points);
    w.u8(static_cast<std::uint8_t>(p.metric));
}

inline VoronoiPartition load_partition(BinaryReader& r) {
    VoronoiPartition p;
    p.seeds.resize(r.u64());
    for (GeoPoint& s : p.seeds) {
        s.lat = r.f64();
        s.lon = r.f64();
    }
    p.areas_km2 = r.vec<double>();
    p.mc_points = r.u32();
    p.metric = static_cast<SeedMetric>(r.u8());
    p.rebuild_units();
    return p;
}

}  // namespace detail

inline constexpr std::uint32_t kModelMagic = 0x434f4c47;  // "GLOC"
inline constexpr std::uint32_t kModelVersion = 1;

inline void save_model(const EnsembleModel& m, const std::string& path) {
    BinaryWriter w(path);
    w.u32(kModelMagic);
    w.u32(kModelVersion);
    nlohmann::json header{{"config", m.config.to_json()},
                          {"p", m.p},
                          {"domain", domain_to_geojson(m.domain)},
                          {"members", m.members.size()}};
    w.str(header.dump());
    // knn members reference one shared training matrix; the container stores it once
    std::shared_ptr<const FeatureMatrix> shared = m.shared_knn_data;
    for (const EnsembleMember& member : m.members) {
        if (const auto* knn = dynamic_cast<const KnnClassifier*>(member.classifier.get())) {
            if (!shared) shared = knn->data_ptr();
            if (shared != knn->data_ptr())
                throw std::runtime_error("save_model: knn members with distinct training matrices");
        }
    }
    w.u8(shared ? 1 : 0);
    if (shared) {
        w.u32(shared->p);
        w.u64(shared->rows.size());
        for (const SparseVec& row : shared->rows) w.vec(row);
    }
    for (const EnsembleMember& member : m.members) {
        detail::save_partition(w, member.partition);
        w.vec(member.tile_to_class);
        w.str(member.classifier->kind());
        member.classifier->save(w);
    }
}

inline EnsembleModel load_model(const std::string& path) {
    BinaryReader r(path);
    if (r.u32() != kModelMagic) throw std::runtime_error(path + ": not a model file");
    const std::uint32_t version = r.u32();
    if (version != kModelVersion)
        throw std::runtime_error(path + ": unsupported model version " + std::to_string(version));
    const nlohmann::json header = nlohmann::json::parse(r.str());
    const EnsembleConfig config = EnsembleConfig::from_json(header.at("config"));

    std::vector<Ring> rings;
    std::vector<bool> holes;
    detail::append_geometry(header.at("domain"), rings, holes);
    Domain domain(std::move(rings), std::move(holes));
    Grid grid(domain, config.grid_resolution_deg);

    EnsembleModel model{std::move(domain), std::move(grid), config, header.at("p").get<std::uint32_t>(), {}, nullptr};

    std::shared_ptr<FeatureMatrix> shared;
    if (r.u8()) {
        shared = std::make_shared<FeatureMatrix>();
        shared->p = r.u32();
        shared->rows.resize(r.u64());
        for (SparseVec& row : shared->rows) row = r.vec<std::uint32_t>();
        model.shared_knn_data = shared;
    }
    model.members.resize(header.at("members").get<std::size_t>());
    for (EnsembleMember& member : model.members) {
        member.partition = detail::load_partition(r);
        member.tile_to_class = r.vec<std::int32_t>();
        member.classifier = load_classifier(r.str(), r, shared);
    }
    // rebuild the grid-cell tile assignments (deterministic, so not stored)
    parallel_for(model.members.size(), [&](std::size_t j) {
        EnsembleMember& member = model.members[j];
        member.cell_tile.resize(model.grid.size());
        for (std::size_t c = 0; c < model.grid.size(); ++c)
            member.cell_tile[c] = assign_tile(member.partition, model.grid.centers()[c]);
    });
    return model;
}

}  // namespace geoloc
