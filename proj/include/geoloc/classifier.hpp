#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoloc/dataset.hpp"
#include "geoloc/serial.hpp"

namespace geoloc {

struct TrainConfig {
    int epochs = 20;           // 20 suits national-scale runs, 10 global-scale
    int batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;  // set by the caller; never wall-clock

    nlohmann::json to_json() const {
        return {{"epochs", epochs},       {"batch_size", batch_size}, {"learning_rate", learning_rate},
                {"adam_beta1", beta1},    {"adam_beta2", beta2},      {"adam_eps", eps}};
    }

    static TrainConfig from_json(const nlohmann::json& j) {
        TrainConfig c;
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.beta1 = j.value("adam_beta1", c.beta1);
        c.beta2 = j.value("adam_beta2", c.beta2);
        c.eps = j.value("adam_eps", c.eps);
        return c;
    }
};

// Which supervised classifier a partition gets, with its hyperparameters.
struct ClassifierSpec {
    enum class Kind : std::uint8_t { knn = 0, forest = 1, shallow_net = 2, deep_net = 3 };

    Kind kind = Kind::deep_net;
    int neighbors = 25;                       // knn
    int trees = 200;                          // forest
    std::vector<int> hidden = {2048, 1024, 1024};  // nets
    double dropout = 0.3;                     // deep net only
    TrainConfig train;

    static ClassifierSpec make_knn(int k = 25) {
        ClassifierSpec s;
        s.kind = Kind::knn;
        s.neighbors = k;
        return s;
    }
    static ClassifierSpec make_forest(int trees = 200) {
        ClassifierSpec s;
        s.kind = Kind::forest;
        s.trees = trees;
        return s;
    }
    static ClassifierSpec make_shallow_net(std::vector<int> hidden = {2048}) {
        ClassifierSpec s;
        s.kind = Kind::shallow_net;
        s.hidden = std::move(hidden);
        s.dropout = 0.0;
        return s;
    }
    static ClassifierSpec make_deep_net(std::vector<int> hidden = {2048, 1024, 1024}, double dropout = 0.3) {
        ClassifierSpec s;
        s.kind = Kind::deep_net;
        s.hidden = std::move(hidden);
        s.dropout = dropout;
        return s;
    }

    void validate() const {
        if (neighbors < 1) throw std::invalid_argument("ClassifierSpec: neighbors must be >= 1");
        if (trees < 1) throw std::invalid_argument("ClassifierSpec: trees must be >= 1");
        for (int h : hidden)
            if (h <= 0) throw std::invalid_argument("ClassifierSpec: hidden sizes must be positive");
        if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("ClassifierSpec: dropout must be in [0,1)");
    }

    static Kind kind_from_name(const std::string& name) {
        if (name == "knn") return Kind::knn;
        if (name == "forest") return Kind::forest;
        if (name == "shallow_net") return Kind::shallow_net;
        if (name == "deep_net") return Kind::deep_net;
        throw std::invalid_argument("unknown classifier kind '" + name + "'");
    }

    std::string kind_name() const {
        switch (kind) {
            case Kind::knn: return "knn";
            case Kind::forest: return "forest";
            case Kind::shallow_net: return "shallow_net";
            case Kind::deep_net: return "deep_net";
        }
        return "?";
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"kind", kind_name()}, {"train", train.to_json()}};
        switch (kind) {
            case Kind::knn: j["neighbors"] = neighbors; break;
            case Kind::forest: j["trees"] = trees; break;
            case Kind::shallow_net:
            case Kind::deep_net:
                j["hidden"] = hidden;
                j["dropout"] = dropout;
                break;
        }
        return j;
    }

    static ClassifierSpec from_json(const nlohmann::json& j) {
        ClassifierSpec s;
        s.kind = kind_from_name(j.at("kind").get<std::string>());
        s.neighbors = j.value("neighbors", s.neighbors);
        s.trees = j.value("trees", s.trees);
        if (j.contains("hidden")) s.hidden = j["hidden"].get<std::vector<int>>();
        if (s.kind == Kind::shallow_net && !j.contains("dropout")) s.dropout = 0.0;
        s.dropout = j.value("dropout", s.kind == Kind::deep_net ? s.dropout : 0.0);
        if (j.contains("train")) s.train = TrainConfig::from_json(j["train"]);
        s.validate();
        return s;
    }
};

// A fitted per-partition classifier. predict_proba returns a simplex over the
// class labels the fit saw (occupied tiles only). Immutable after fitting;
// concurrent predict_proba calls are safe.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::size_t class_count() const = 0;
    virtual std::vector<double> predict_proba(const SparseVec& x) const = 0;
    virtual std::string kind() const = 0;
    virtual void save(BinaryWriter& w) const = 0;
};

}  // namespace geoloc
