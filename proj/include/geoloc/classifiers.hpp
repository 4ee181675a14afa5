#pragma once

#include <memory>

#include "geoloc/classifier.hpp"
#include "geoloc/forest.hpp"
#include "geoloc/knn.hpp"
#include "geoloc/net.hpp"

namespace geoloc {

// Fits the classifier a spec asks for. The label space is the caller's
// (occupied tiles only); seed controls every random choice in the fit.
inline std::unique_ptr<Classifier> fit_classifier(const ClassifierSpec& spec,
                                                  const std::shared_ptr<const FeatureMatrix>& data,
                                                  const std::vector<std::uint32_t>& labels,
                                                  const std::vector<double>& weights, std::size_t n_classes,
                                                  std::uint64_t seed, NetFitInfo* info = nullptr) {
    spec.validate();
    switch (spec.kind) {
        case ClassifierSpec::Kind::knn:
            return fit_knn(spec.neighbors, data, labels, weights, n_classes);
        case ClassifierSpec::Kind::forest:
            return fit_forest(spec.trees, data, labels, weights, n_classes, seed);
        case ClassifierSpec::Kind::shallow_net:
        case ClassifierSpec::Kind::deep_net: {
            TrainConfig cfg = spec.train;
            cfg.seed = seed;
            const double dropout = spec.kind == ClassifierSpec::Kind::deep_net ? spec.dropout : 0.0;
            return train_net(spec.hidden, dropout, *data, labels, weights, n_classes, cfg, info,
                             spec.kind_name().c_str());
        }
    }
    throw std::logic_error("fit_classifier: unreachable");
}

inline std::unique_ptr<Classifier> load_classifier(const std::string& kind, BinaryReader& r,
                                                   std::shared_ptr<const FeatureMatrix> shared_data) {
    if (kind == "knn") return KnnClassifier::load(r, std::move(shared_data));
    if (kind == "forest") return ForestClassifier::load(r);
    if (kind == "shallow_net" || kind == "deep_net") return NetClassifier::load(r, kind);
    throw std::runtime_error("unknown classifier kind in model file: " + kind);
}

}  // namespace geoloc
