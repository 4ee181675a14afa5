#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoloc/classifier.hpp"
#include "geoloc/dataset.hpp"
#include "geoloc/random.hpp"

namespace geoloc {

struct NetDivergenceError : std::runtime_error {
    int epoch;
    explicit NetDivergenceError(int epoch_)
        : std::runtime_error("net training diverged (non-finite loss) at epoch " + std::to_string(epoch_)),
          epoch(epoch_) {}
};

// Feedforward network parameters. layers[0] consumes the sparse input (width
// p); the last layer emits class logits; ReLU between layers. Instantiated
// with float for training speed and double for hand checks and the gradient
// checker.
template <typename Scalar>
struct NetParamsT {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    struct Layer {
        Mat W;  // out x in
        Vec b;
    };

    std::vector<Layer> layers;
    std::uint32_t input_dim = 0;

    std::size_t output_dim() const { return static_cast<std::size_t>(layers.back().b.size()); }

    template <typename Other>
    NetParamsT<Other> cast() const {
        NetParamsT<Other> out;
        out.input_dim = input_dim;
        out.layers.resize(layers.size());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            out.layers[l].W = layers[l].W.template cast<Other>();
            out.layers[l].b = layers[l].b.template cast<Other>();
        }
        return out;
    }
};

using NetParameters = NetParamsT<float>;

namespace net_detail {

// He-uniform weights (bound sqrt(6/fan_in)), zero biases. Fill order is fixed
// (column-major coefficient order, layer by layer) for reproducibility.
template <typename Scalar>
NetParamsT<Scalar> init_params(std::uint32_t p, const std::vector<int>& hidden, std::size_t k, Rng& rng) {
    NetParamsT<Scalar> params;
    params.input_dim = p;
    std::vector<std::size_t> dims;
    dims.push_back(p);
    for (int h : hidden) dims.push_back(static_cast<std::size_t>(h));
    dims.push_back(k);
    params.layers.resize(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        auto& layer = params.layers[l];
        layer.W.resize(static_cast<Eigen::Index>(dims[l + 1]), static_cast<Eigen::Index>(dims[l]));
        layer.b = NetParamsT<Scalar>::Vec::Zero(static_cast<Eigen::Index>(dims[l + 1]));
        const double bound = std::sqrt(6.0 / static_cast<double>(dims[l]));
        Scalar* data = layer.W.data();
        for (Eigen::Index i = 0; i < layer.W.size(); ++i)
            data[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
    return params;
}

// Forward pass over a batch of sparse rows (given by idx into rows). Masks,
// when present, are the inverted-dropout factors applied to each hidden
// activation. Fills Z (pre-activations per layer) and A (post-activation);
// the last Z holds the logits.
template <typename Scalar>
void forward_batch(const NetParamsT<Scalar>& params, const std::vector<SparseVec>& rows,
                   const std::uint32_t* idx, std::size_t batch,
                   const std::vector<typename NetParamsT<Scalar>::Mat>* masks,
                   std::vector<typename NetParamsT<Scalar>::Mat>& Z,
                   std::vector<typename NetParamsT<Scalar>::Mat>& A) {
    const std::size_t n_layers = params.layers.size();
    Z.resize(n_layers);
    A.resize(n_layers);
    const auto b_batch = static_cast<Eigen::Index>(batch);

    // sparse gather for the input layer
    const auto& first = params.layers[0];
    Z[0].resize(first.W.rows(), b_batch);
    for (std::size_t i = 0; i < batch; ++i) {
        Z[0].col(static_cast<Eigen::Index>(i)) = first.b;
        for (std::uint32_t j : rows[idx[i]])
            Z[0].col(static_cast<Eigen::Index>(i)) += first.W.col(j);
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        if (l > 0) {
            Z[l].noalias() = params.layers[l].W * A[l - 1];
            Z[l].colwise() += params.layers[l].b;
        }
        if (l + 1 < n_layers) {
            A[l] = Z[l].cwiseMax(Scalar(0));
            if (masks) A[l].array() *= (*masks)[l].array();
        }
    }
}

// Per-column softmax with max subtraction plus the weighted-mean cross
// entropy. coeff[i] = w_i / sum of batch weights. Returns the batch loss and
// fills dLogits = (q - onehot(y)) * coeff, the start of backpropagation.
template <typename Scalar>
double softmax_loss_grad(const typename NetParamsT<Scalar>::Mat& logits, const std::uint32_t* labels,
                         const std::uint32_t* idx, const double* coeff, std::size_t batch,
                         typename NetParamsT<Scalar>::Mat* d_logits) {
    double loss = 0.0;
    if (d_logits) d_logits->resize(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < batch; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        const Scalar m = logits.col(col).maxCoeff();
        const std::uint32_t y = labels[idx[i]];
        if (d_logits) {
            auto dcol = d_logits->col(col);
            dcol.array() = (logits.col(col).array() - m).exp();
            const Scalar sum_exp = dcol.sum();
            loss += coeff[i] *
                    (-(static_cast<double>(logits(static_cast<Eigen::Index>(y), col) - m) -
                       std::log(static_cast<double>(sum_exp))));
            dcol *= static_cast<Scalar>(coeff[i]) / sum_exp;
            dcol(static_cast<Eigen::Index>(y)) -= static_cast<Scalar>(coeff[i]);
        } else {
            const Scalar sum_exp = (logits.col(col).array() - m).exp().sum();
            loss += coeff[i] *
                    (-(static_cast<double>(logits(static_cast<Eigen::Index>(y), col) - m) -
                       std::log(static_cast<double>(sum_exp))));
        }
    }
    return loss;
}

template <typename Scalar>
struct Gradients {
    std::vector<typename NetParamsT<Scalar>::Mat> dW;
    std::vector<typename NetParamsT<Scalar>::Vec> db;
    std::vector<std::uint32_t> touched;  // input columns written in the last call
};

// Weighted-mean cross-entropy loss over the given batch and its gradient.
// The gradient of the first layer is accumulated only on touched columns.
template <typename Scalar>
double loss_and_grad(const NetParamsT<Scalar>& params, const std::vector<SparseVec>& rows,
                     const std::uint32_t* idx, std::size_t batch, const std::uint32_t* labels,
                     const double* coeff, const std::vector<typename NetParamsT<Scalar>::Mat>* masks,
                     Gradients<Scalar>* grads) {
    using Mat = typename NetParamsT<Scalar>::Mat;
    const std::size_t n_layers = params.layers.size();
    std::vector<Mat> Z, A;
    forward_batch(params, rows, idx, batch, masks, Z, A);

    Mat delta;
    const double loss =
        softmax_loss_grad<Scalar>(Z[n_layers - 1], labels, idx, coeff, batch, grads ? &delta : nullptr);
    if (!grads) return loss;

    if (grads->dW.size() != n_layers) {
        grads->dW.resize(n_layers);
        grads->db.resize(n_layers);
    }
    for (std::size_t li = n_layers; li-- > 0;) {
        auto& dW = grads->dW[li];
        auto& db = grads->db[li];
        db = delta.rowwise().sum();
        if (li > 0) {
            dW.noalias() = delta * A[li - 1].transpose();
            Mat upstream;
            upstream.noalias() = params.layers[li].W.transpose() * delta;
            if (masks) upstream.array() *= (*masks)[li - 1].array();
            delta = upstream.array() * (Z[li - 1].array() > Scalar(0)).template cast<Scalar>();
        } else {
            // scatter into touched input columns only; clear last batch's first
            if (dW.rows() != params.layers[0].W.rows() || dW.cols() != params.layers[0].W.cols()) {
                dW = Mat::Zero(params.layers[0].W.rows(), params.layers[0].W.cols());
                grads->touched.clear();
            }
            for (std::uint32_t j : grads->touched) dW.col(j).setZero();
            grads->touched.clear();
            for (std::size_t i = 0; i < batch; ++i) {
                for (std::uint32_t j : rows[idx[i]]) {
                    dW.col(j) += delta.col(static_cast<Eigen::Index>(i));
                    grads->touched.push_back(j);
                }
            }
        }
    }
    return loss;
}

}  // namespace net_detail

// Single-sample forward pass: logits and softmax probabilities (computed in
// double regardless of the parameter scalar). Masks apply inverted-dropout
// factors to hidden activations; inference passes none.
template <typename Scalar>
std::pair<std::vector<double>, std::vector<double>> net_forward(
    const NetParamsT<Scalar>& params, const SparseVec& x,
    const std::vector<typename NetParamsT<Scalar>::Vec>* masks = nullptr) {
    using Vec = typename NetParamsT<Scalar>::Vec;
    Vec a;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Vec z;
        if (l == 0) {
            z = layer.b;
            for (std::uint32_t j : x) z += layer.W.col(j);
        } else {
            z.noalias() = layer.W * a;
            z += layer.b;
        }
        if (l + 1 < params.layers.size()) {
            a = z.cwiseMax(Scalar(0));
            if (masks) a.array() *= (*masks)[l].array();
        } else {
            a = z;
        }
    }
    std::vector<double> logits(static_cast<std::size_t>(a.size()));
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = static_cast<double>(a[static_cast<Eigen::Index>(i)]);
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i])) throw std::runtime_error("net_forward: non-finite logit");
        probs[i] = std::exp(logits[i] - m);
        sum += probs[i];
    }
    for (double& v : probs) v /= sum;
    return {std::move(logits), std::move(probs)};
}

class NetClassifier final : public Classifier {
public:
    NetClassifier(NetParameters params, std::string kind) : params_(std::move(params)), kind_(std::move(kind)) {}

    std::size_t class_count() const override { return params_.output_dim(); }
    std::string kind() const override { return kind_; }
    const NetParameters& parameters() const { return params_; }

    std::vector<double> predict_proba(const SparseVec& x) const override {
        return net_forward(params_, x).second;
    }

    void save(BinaryWriter& w) const override {
        w.u32(params_.input_dim);
        w.u32(static_cast<std::uint32_t>(params_.layers.size()));
        for (const auto& layer : params_.layers) {
            w.u32(static_cast<std::uint32_t>(layer.W.rows()));
            w.u32(static_cast<std::uint32_t>(layer.W.cols()));
            w.raw(layer.W.data(), sizeof(float) * static_cast<std::size_t>(layer.W.size()));
            w.raw(layer.b.data(), sizeof(float) * static_cast<std::size_t>(layer.b.size()));
        }
    }

    static std::unique_ptr<NetClassifier> load(BinaryReader& r, std::string kind) {
        NetParameters params;
        params.input_dim = r.u32();
        params.layers.resize(r.u32());
        for (auto& layer : params.layers) {
            const auto rows = static_cast<Eigen::Index>(r.u32());
            const auto cols = static_cast<Eigen::Index>(r.u32());
            layer.W.resize(rows, cols);
            layer.b.resize(rows);
            r.raw(layer.W.data(), sizeof(float) * static_cast<std::size_t>(layer.W.size()));
            r.raw(layer.b.data(), sizeof(float) * static_cast<std::size_t>(layer.b.size()));
        }
        return std::make_unique<NetClassifier>(std::move(params), std::move(kind));
    }

private:
    NetParameters params_;
    std::string kind_;
};

struct NetFitInfo {
    std::vector<double> epoch_losses;  // mean weighted cross-entropy per epoch
};

// Minimizes the weighted-mean categorical cross-entropy with Adam. Dropout
// masks are resampled per minibatch with inverted scaling, so inference needs
// no rescaling. Deterministic given config.seed.
inline std::unique_ptr<NetClassifier> train_net(const std::vector<int>& hidden, double dropout,
                                                const FeatureMatrix& X, const std::vector<std::uint32_t>& labels,
                                                const std::vector<double>& weights, std::size_t n_classes,
                                                const TrainConfig& cfg, NetFitInfo* info = nullptr,
                                                const char* kind_name = nullptr) {
    using Mat = NetParameters::Mat;
    using Vec = NetParameters::Vec;
    const std::size_t n = X.rows.size();
    Rng rng(cfg.seed);
    NetParameters params = net_detail::init_params<float>(X.p, hidden, n_classes, rng);
    const std::size_t n_layers = params.layers.size();

    std::vector<Mat> mW(n_layers), vW(n_layers);
    std::vector<Vec> mb(n_layers), vb(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        mW[l] = Mat::Zero(params.layers[l].W.rows(), params.layers[l].W.cols());
        vW[l] = mW[l];
        mb[l] = Vec::Zero(params.layers[l].b.size());
        vb[l] = mb[l];
    }

    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    const std::size_t batch_size = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
    net_detail::Gradients<float> grads;
    std::vector<double> coeff(batch_size);
    std::vector<Mat> masks;
    long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(perm);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t b = std::min(batch_size, n - start);
            double wsum = 0.0;
            for (std::size_t i = 0; i < b; ++i) wsum += weights[perm[start + i]];
            if (wsum <= 0.0) continue;  // all-zero-weight batch carries no signal
            for (std::size_t i = 0; i < b; ++i) coeff[i] = weights[perm[start + i]] / wsum;

            const bool use_dropout = dropout > 0.0 && n_layers > 1;
            if (use_dropout) {
                masks.resize(n_layers - 1);
                const auto keep = 1.0 - dropout;
                for (std::size_t l = 0; l + 1 < n_layers; ++l) {
                    masks[l].resize(params.layers[l].W.rows(), static_cast<Eigen::Index>(b));
                    float* data = masks[l].data();
                    for (Eigen::Index i = 0; i < masks[l].size(); ++i)
                        data[i] = rng.next_double() < keep ? static_cast<float>(1.0 / keep) : 0.0f;
                }
            }

            const double loss =
                net_detail::loss_and_grad<float>(params, X.rows, perm.data() + start, b, labels.data(),
                                                 coeff.data(), use_dropout ? &masks : nullptr, &grads);
            if (!std::isfinite(loss)) throw NetDivergenceError(epoch);
            epoch_loss += loss;
            ++batches;

            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            const auto lr = static_cast<float>(cfg.learning_rate);
            const auto b1 = static_cast<float>(cfg.beta1), b2 = static_cast<float>(cfg.beta2);
            const auto eps = static_cast<float>(cfg.eps);
            const auto c1 = static_cast<float>(1.0 / bc1), c2 = static_cast<float>(1.0 / bc2);
            for (std::size_t l = 0; l < n_layers; ++l) {
                mW[l] = b1 * mW[l] + (1.0f - b1) * grads.dW[l];
                vW[l].array() = b2 * vW[l].array() + (1.0f - b2) * grads.dW[l].array().square();
                params.layers[l].W.array() -= lr * (mW[l].array() * c1) / ((vW[l].array() * c2).sqrt() + eps);
                mb[l] = b1 * mb[l] + (1.0f - b1) * grads.db[l];
                vb[l].array() = b2 * vb[l].array() + (1.0f - b2) * grads.db[l].array().square();
                params.layers[l].b.array() -= lr * (mb[l].array() * c1) / ((vb[l].array() * c2).sqrt() + eps);
            }
        }
        if (info) info->epoch_losses.push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);
    }
    const char* kind = kind_name ? kind_name : (hidden.size() > 1 ? "deep_net" : "shallow_net");
    return std::make_unique<NetClassifier>(std::move(params), kind);
}

// Compares the analytic gradient of the weighted-mean cross-entropy against
// central finite differences over every parameter, in double precision with
// dropout disabled. Returns the maximum relative error.
inline double gradient_check(std::uint32_t p, const std::vector<int>& hidden, std::size_t n_classes,
                             const FeatureMatrix& X, const std::vector<std::uint32_t>& labels,
                             const std::vector<double>& weights, std::uint64_t seed, double h = 1e-5) {
    const std::size_t n = X.rows.size();
    Rng rng(seed);
    NetParamsT<double> params = net_detail::init_params<double>(p, hidden, n_classes, rng);

    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    std::vector<double> coeff(n);
    for (std::size_t i = 0; i < n; ++i) coeff[i] = weights[i] / wsum;

    net_detail::Gradients<double> grads;
    net_detail::loss_and_grad<double>(params, X.rows, idx.data(), n, labels.data(), coeff.data(), nullptr, &grads);

    const auto loss_at = [&]() {
        return net_detail::loss_and_grad<double>(params, X.rows, idx.data(), n, labels.data(), coeff.data(),
                                                 nullptr, nullptr);
    };
    double max_rel = 0.0;
    const auto check = [&](double& theta, double analytic) {
        const double saved = theta;
        theta = saved + h;
        const double up = loss_at();
        theta = saved - h;
        const double down = loss_at();
        theta = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& W = params.layers[l].W;
        for (Eigen::Index i = 0; i < W.size(); ++i) check(W.data()[i], grads.dW[l].data()[i]);
        auto& b = params.layers[l].b;
        for (Eigen::Index i = 0; i < b.size(); ++i) check(b.data()[i], grads.db[l].data()[i]);
    }
    return max_rel;
}

}  // namespace geoloc
