#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoloc/dataset.hpp"
#include "geoloc/geometry.hpp"
#include "geoloc/parallel.hpp"
#include "geoloc/random.hpp"

namespace geoloc {

// Spatial occupancy field for one taxon: logistic(base + sum of Gaussian
// bumps in great-circle distance). Bumpless fields are spatially flat noise.
struct Bump {
    GeoPoint center;
    double scale_km = 0.0;
    double amplitude = 0.0;
};

struct TaxonField {
    double base_logit = 0.0;
    std::vector<Bump> bumps;
};

inline double prevalence(const TaxonField& field, const GeoPoint& s) {
    double logit = field.base_logit;
    for (const Bump& b : field.bumps) {
        const double d = haversine(s, b.center);
        logit += b.amplitude * std::exp(-d * d / (2.0 * b.scale_km * b.scale_km));
    }
    return 1.0 / (1.0 + std::exp(-logit));
}

struct SyntheticConfig {
    std::uint32_t p = 200;
    std::uint32_t n = 2000;
    std::uint32_t informative = 30;  // leading taxa receive bumps
    int bumps_min = 1, bumps_max = 3;
    double amp_min = 2.5, amp_max = 5.0;
    double scale_min_km = 150.0, scale_max_km = 500.0;
    double info_base_min = -3.5, info_base_max = -1.5;
    double noise_base_min = -2.5, noise_base_max = -0.5;
    std::uint64_t seed = 0;
    std::vector<TaxonField> explicit_fields;  // overrides random field generation

    void validate() const {
        if (p < 1 || n < 1) throw std::invalid_argument("SyntheticConfig: p and n must be >= 1");
        if (informative > p) throw std::invalid_argument("SyntheticConfig: informative > p");
        if (bumps_min < 0 || bumps_max < bumps_min) throw std::invalid_argument("SyntheticConfig: bad bump counts");
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"p", p},
                         {"n", n},
                         {"informative", informative},
                         {"bumps_min", bumps_min},
                         {"bumps_max", bumps_max},
                         {"amp_min", amp_min},
                         {"amp_max", amp_max},
                         {"scale_min_km", scale_min_km},
                         {"scale_max_km", scale_max_km},
                         {"info_base_min", info_base_min},
                         {"info_base_max", info_base_max},
                         {"noise_base_min", noise_base_min},
                         {"noise_base_max", noise_base_max},
                         {"seed", seed}};
        if (!explicit_fields.empty()) {
            nlohmann::json fields = nlohmann::json::array();
            for (const TaxonField& f : explicit_fields) {
                nlohmann::json bumps = nlohmann::json::array();
                for (const Bump& b : f.bumps)
                    bumps.push_back({{"lat", b.center.lat},
                                     {"lon", b.center.lon},
                                     {"scale_km", b.scale_km},
                                     {"amplitude", b.amplitude}});
                fields.push_back({{"base_logit", f.base_logit}, {"bumps", bumps}});
            }
            j["fields"] = fields;
        }
        return j;
    }

    static SyntheticConfig from_json(const nlohmann::json& j) {
        SyntheticConfig c;
        c.p = j.value("p", c.p);
        c.n = j.value("n", c.n);
        c.informative = j.value("informative", c.informative);
        c.bumps_min = j.value("bumps_min", c.bumps_min);
        c.bumps_max = j.value("bumps_max", c.bumps_max);
        c.amp_min = j.value("amp_min", c.amp_min);
        c.amp_max = j.value("amp_max", c.amp_max);
        c.scale_min_km = j.value("scale_min_km", c.scale_min_km);
        c.scale_max_km = j.value("scale_max_km", c.scale_max_km);
        c.info_base_min = j.value("info_base_min", c.info_base_min);
        c.info_base_max = j.value("info_base_max", c.info_base_max);
        c.noise_base_min = j.value("noise_base_min", c.noise_base_min);
        c.noise_base_max = j.value("noise_base_max", c.noise_base_max);
        c.seed = j.value("seed", c.seed);
        if (j.contains("fields")) {
            for (const auto& fj : j["fields"]) {
                TaxonField f;
                f.base_logit = fj.at("base_logit").get<double>();
                if (fj.contains("bumps"))
                    for (const auto& bj : fj["bumps"])
                        f.bumps.push_back(Bump{GeoPoint{bj.at("lat").get<double>(), bj.at("lon").get<double>()},
                                               bj.at("scale_km").get<double>(), bj.at("amplitude").get<double>()});
                c.explicit_fields.push_back(std::move(f));
            }
            if (c.explicit_fields.size() != c.p)
                throw std::invalid_argument("SyntheticConfig: explicit fields must cover all p taxa");
        }
        c.validate();
        return c;
    }
};

/// The per-taxon occupancy fields a config describes (explicit or drawn).
inline std::vector<TaxonField> make_fields(const SyntheticConfig& cfg, const Domain& domain) {
    cfg.validate();
    if (!cfg.explicit_fields.empty()) {
        if (cfg.explicit_fields.size() != cfg.p)
            throw std::invalid_argument("make_fields: explicit fields must cover all p taxa");
        return cfg.explicit_fields;
    }
    Rng rng(derive_seed(cfg.seed, 0x666c64ULL));
    std::vector<TaxonField> fields(cfg.p);
    for (std::uint32_t t = 0; t < cfg.p; ++t) {
        TaxonField& f = fields[t];
        if (t < cfg.informative) {
            f.base_logit = rng.uniform(cfg.info_base_min, cfg.info_base_max);
            const int n_bumps = rng.uniform_int(cfg.bumps_min, cfg.bumps_max);
            for (int b = 0; b < n_bumps; ++b) {
                Bump bump;
                bump.center = sample_uniform(domain, rng, 1)[0];
                bump.scale_km = rng.uniform(cfg.scale_min_km, cfg.scale_max_km);
                bump.amplitude = rng.uniform(cfg.amp_min, cfg.amp_max);
                f.bumps.push_back(bump);
            }
        } else {
            f.base_logit = rng.uniform(cfg.noise_base_min, cfg.noise_base_max);
        }
    }
    return fields;
}

// Draws n sample locations uniformly over the domain and, independently per
// sample, each taxon with probability prevalence(t, s). Per-sample feature
// streams derive from (seed, sample), so generation parallelizes cleanly.
inline Dataset generate_with_fields(const std::vector<TaxonField>& fields, std::uint32_t n, const Domain& domain,
                                    std::uint64_t seed) {
    Dataset ds;
    ds.p = static_cast<std::uint32_t>(fields.size());
    Rng loc_rng(derive_seed(seed, 0x6c6f63ULL));
    const std::vector<GeoPoint> locations = sample_uniform(domain, loc_rng, n);
    ds.samples.resize(n);
    parallel_for(n, [&](std::size_t i) {
        Sample& s = ds.samples[i];
        char buf[24];
        std::snprintf(buf, sizeof buf, "s%06zu", i);
        s.id = buf;
        s.location = locations[i];
        Rng rng(derive_seed(seed, 0x73616dULL, i));
        for (std::uint32_t t = 0; t < ds.p; ++t)
            if (rng.bernoulli(prevalence(fields[t], s.location))) s.features.push_back(t);
    });
    return ds;
}

inline Dataset generate(const SyntheticConfig& cfg, const Domain& domain) {
    return generate_with_fields(make_fields(cfg, domain), cfg.n, domain, cfg.seed);
}

// Exact Bayes posterior over the grid for generated data: features are
// conditionally independent given location by construction, and the location
// prior is uniform over the domain. Densities are per km^2; cell masses
// (density * area) sum to one.
class OraclePosterior {
public:
    OraclePosterior(const std::vector<TaxonField>& fields, const Grid& grid) : grid_(&grid) {
        const std::size_t cells = grid.size();
        const std::size_t p = fields.size();
        log_delta_.resize(cells * p);
        base_.assign(cells, 0.0);
        parallel_for(cells, [&](std::size_t c) {
            const GeoPoint& center = grid.centers()[c];
            double base = 0.0;
            for (std::size_t t = 0; t < p; ++t) {
                const double rho = prevalence(fields[t], center);
                const double log_rho = std::log(rho);
                const double log_1m = std::log1p(-rho);
                base += log_1m;
                log_delta_[c * p + t] = log_rho - log_1m;
            }
            base_[c] = base;
        });
        p_ = p;
    }

    /// Posterior density per km^2 at every grid cell.
    std::vector<double> posterior(const SparseVec& x) const {
        const std::size_t cells = base_.size();
        std::vector<double> loglik(cells);
        double max_ll = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cells; ++c) {
            double ll = base_[c];
            const double* delta = &log_delta_[c * p_];
            for (std::uint32_t t : x) ll += delta[t];
            loglik[c] = ll;
            max_ll = std::max(max_ll, ll);
        }
        double mass = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            loglik[c] = std::exp(loglik[c] - max_ll);
            mass += loglik[c] * grid_->cell_areas_km2()[c];
        }
        for (double& v : loglik) v /= mass;
        return loglik;
    }

    GeoPoint argmax(const SparseVec& x) const {
        const std::vector<double> surface = posterior(x);
        std::size_t best = 0;
        for (std::size_t c = 1; c < surface.size(); ++c)
            if (surface[c] > surface[best]) best = c;
        return grid_->centers()[best];
    }

private:
    const Grid* grid_;
    std::vector<double> log_delta_;  // cells x p: log(rho) - log(1-rho)
    std::vector<double> base_;       // per cell: sum_t log(1-rho)
    std::size_t p_ = 0;
};

/// One-off oracle evaluation (builds the cached tables for a single query).
inline std::vector<double> oracle_posterior(const std::vector<TaxonField>& fields, const SparseVec& x,
                                            const Grid& grid) {
    return OraclePosterior(fields, grid).posterior(x);
}

}  // namespace geoloc
