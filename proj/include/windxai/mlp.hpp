#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "windxai/core.hpp"
#include "windxai/predictor.hpp"
#include "windxai/util.hpp"

namespace windxai {

enum class Activation { Logistic, Relu };

inline const char* activation_name(Activation a) {
    return a == Activation::Logistic ? "logistic" : "relu";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "logistic") return Activation::Logistic;
    if (s == "relu") return Activation::Relu;
    throw UsageError("unknown activation: " + s);
}

struct MlpConfig {
    std::vector<Feature> features{Feature::WindSpeed, Feature::AirDensity, Feature::TurbulenceIntensity};
    std::vector<int> hidden{3, 3};
    Activation activation = Activation::Logistic;
    double learning_rate_init = 0.1;
    double tol = 1e-6;
    int patience = 100;  // early-stopping wait on validation loss
    int max_epochs = 10000;
    int batch_size = 200;  // used when the training set exceeds full_batch_limit
    int full_batch_limit = 5000;

    static MlpConfig ann_small(std::vector<Feature> feats) {
        MlpConfig c;
        c.features = std::move(feats);
        c.hidden = {3, 3};
        c.activation = Activation::Logistic;
        return c;
    }
    static MlpConfig ann_large(std::vector<Feature> feats) {
        MlpConfig c;
        c.features = std::move(feats);
        c.hidden = {100, 100, 25};
        c.activation = Activation::Relu;
        return c;
    }
};

struct TrainingHistory {
    int epochs = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> curve;  // (train_loss, val_loss) per epoch, standardized units
};

namespace mlpdetail {

struct Params {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
};

inline void apply_activation(Eigen::MatrixXd& m, Activation act) {
    if (act == Activation::Logistic) {
        m = m.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
    } else {
        m = m.cwiseMax(0.0);
    }
}

struct ForwardPass {
    std::vector<Eigen::MatrixXd> activations;      // a_0 = input, ..., a_L = output
    std::vector<Eigen::MatrixXd> pre_activations;  // z_1 ... z_L
};

// Columns of x are samples; hidden layers use `act`, the output is linear.
inline ForwardPass forward(const Params& p, Activation act, const Eigen::MatrixXd& x) {
    ForwardPass fp;
    fp.activations.push_back(x);
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < p.w.size(); ++l) {
        Eigen::MatrixXd z = (p.w[l] * a).colwise() + p.b[l];
        fp.pre_activations.push_back(z);
        a = std::move(z);
        if (l + 1 < p.w.size()) apply_activation(a, act);
        fp.activations.push_back(a);
    }
    return fp;
}

// Mean squared error over the batch plus parameter gradients.
inline double batch_gradients(const Params& p, Activation act, const Eigen::MatrixXd& x,
                              const Eigen::RowVectorXd& y, std::vector<Eigen::MatrixXd>& gw,
                              std::vector<Eigen::VectorXd>& gb) {
    const auto fp = forward(p, act, x);
    const Eigen::RowVectorXd resid = fp.activations.back().row(0) - y;
    const double n = static_cast<double>(x.cols());
    const double loss = resid.squaredNorm() / n;

    gw.assign(p.w.size(), Eigen::MatrixXd());
    gb.assign(p.w.size(), Eigen::VectorXd());
    Eigen::MatrixXd delta = (2.0 / n) * resid;  // dL/dz of the linear output layer
    for (std::size_t l = p.w.size(); l-- > 0;) {
        gw[l] = delta * fp.activations[l].transpose();
        gb[l] = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = p.w[l].transpose() * delta;
            if (act == Activation::Logistic) {
                const Eigen::MatrixXd& a = fp.activations[l];
                delta = back.cwiseProduct(a.cwiseProduct((1.0 - a.array()).matrix()));
            } else {
                delta = back.cwiseProduct((fp.pre_activations[l - 1].array() > 0.0).cast<double>().matrix());
            }
        }
    }
    return loss;
}

inline double dataset_loss(const Params& p, Activation act, const Eigen::MatrixXd& x,
                           const Eigen::RowVectorXd& y) {
    const auto fp = forward(p, act, x);
    return (fp.activations.back().row(0) - y).squaredNorm() / static_cast<double>(x.cols());
}

struct Adam {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long t = 0;

    explicit Adam(const Params& p) {
        for (const auto& m : p.w) {
            mw.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
            vw.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
        }
        for (const auto& v : p.b) {
            mb.push_back(Eigen::VectorXd::Zero(v.size()));
            vb.push_back(Eigen::VectorXd::Zero(v.size()));
        }
    }

    void step(Params& p, const std::vector<Eigen::MatrixXd>& gw, const std::vector<Eigen::VectorXd>& gb,
              double lr) {
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t l = 0; l < p.w.size(); ++l) {
            mw[l] = beta1 * mw[l] + (1.0 - beta1) * gw[l];
            vw[l] = beta2 * vw[l] + (1.0 - beta2) * gw[l].cwiseProduct(gw[l]);
            p.w[l] -= lr * (mw[l] / c1).cwiseQuotient(((vw[l] / c2).cwiseSqrt().array() + eps).matrix());
            mb[l] = beta1 * mb[l] + (1.0 - beta1) * gb[l];
            vb[l] = beta2 * vb[l] + (1.0 - beta2) * gb[l].cwiseProduct(gb[l]);
            p.b[l] -= lr * (mb[l] / c1).cwiseQuotient(((vb[l] / c2).cwiseSqrt().array() + eps).matrix());
        }
    }
};

inline Eigen::MatrixXd records_to_matrix(const Records& recs, const FeatureSchema& schema) {
    Eigen::MatrixXd x(schema.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        for (std::size_t f = 0; f < schema.size(); ++f) {
            x(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(i)) =
                (recs[i].feature(schema.features[f]) - schema.mean[f]) / schema.std[f];
        }
    }
    return x;
}

}  // namespace mlpdetail

// Fully connected regressor with a linear output unit. Inputs and target are
// z-scored with training statistics; predictions are reported back in kW.
class MlpModel final : public Predictor {
  public:
    MlpModel() = default;
    MlpModel(FeatureSchema schema, double y_mean, double y_std, Activation act,
             std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases)
        : schema_(std::move(schema)), y_mean_(y_mean), y_std_(y_std), activation_(act) {
        params_.w = std::move(weights);
        params_.b = std::move(biases);
    }

    const FeatureSchema& schema() const override { return schema_; }
    std::string kind() const override { return "mlp"; }

    double predict(std::span<const double> features) const override {
        if (features.size() != schema_.size()) throw UsageError("mlp predict: feature count mismatch");
        const auto z = schema_.standardize(features);
        Eigen::MatrixXd x(z.size(), 1);
        for (std::size_t i = 0; i < z.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = z[i];
        const auto fp = mlpdetail::forward(params_, activation_, x);
        const double out = fp.activations.back()(0, 0);
        if (!std::isfinite(out)) throw NumericError("mlp predict: non-finite output");
        return out * y_std_ + y_mean_;
    }

    Activation activation() const { return activation_; }
    double y_mean() const { return y_mean_; }
    double y_std() const { return y_std_; }
    const std::vector<Eigen::MatrixXd>& weights() const { return params_.w; }
    const std::vector<Eigen::VectorXd>& biases() const { return params_.b; }
    const mlpdetail::Params& params() const { return params_; }
    const TrainingHistory& history() const { return history_; }
    TrainingHistory& mutable_history() { return history_; }

  private:
    FeatureSchema schema_;
    double y_mean_ = 0.0;
    double y_std_ = 1.0;
    Activation activation_ = Activation::Logistic;
    mlpdetail::Params params_;
    TrainingHistory history_;
};

inline double mlp_predict(const MlpModel& model, std::span<const double> features) {
    return model.predict(features);
}

// Trains with Adam (beta1 0.9, beta2 0.999, eps 1e-8) at an initial learning
// rate of 0.1, no weight penalty. The rate divides by 5 whenever the
// end-of-epoch training loss fails to improve on its best by tol for two
// consecutive epochs. Training stops when the validation loss has not
// improved for `patience` epochs (best-validation parameters are restored)
// or at max_epochs. Full batch up to full_batch_limit rows, otherwise
// mini-batches of batch_size reshuffled per epoch from the seed.
inline MlpModel mlp_train(const MlpConfig& config, const Records& train, const Records& val,
                          std::uint64_t seed) {
    if (train.empty() || val.empty()) throw DataError("mlp_train: empty train or validation set");

    FeatureSchema schema = fit_scaler(train, FeatureSchema{config.features, {}, {}});
    double y_mean = 0.0;
    for (const auto& r : train) y_mean += r.power;
    y_mean /= static_cast<double>(train.size());
    double y_var = 0.0;
    for (const auto& r : train) y_var += (r.power - y_mean) * (r.power - y_mean);
    const double y_std = std::sqrt(y_var / static_cast<double>(train.size()));
    if (!(y_std > 0.0)) throw DataError("mlp_train: constant target");

    std::vector<int> dims;
    dims.push_back(static_cast<int>(schema.size()));
    dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
    dims.push_back(1);

    mlpdetail::Params params;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Rng rng(seed, /*stream=*/0x91077, l);
        Eigen::MatrixXd m(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) m(r, c) = rng.uniform(-limit, limit);
        }
        params.w.push_back(std::move(m));
        params.b.push_back(Eigen::VectorXd::Zero(fan_out));
    }

    const Eigen::MatrixXd xtr = mlpdetail::records_to_matrix(train, schema);
    const Eigen::MatrixXd xval = mlpdetail::records_to_matrix(val, schema);
    Eigen::RowVectorXd ytr(train.size()), yval(val.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        ytr(static_cast<Eigen::Index>(i)) = (train[i].power - y_mean) / y_std;
    for (std::size_t i = 0; i < val.size(); ++i)
        yval(static_cast<Eigen::Index>(i)) = (val[i].power - y_mean) / y_std;

    const auto n = static_cast<std::size_t>(xtr.cols());
    const bool full_batch = n <= static_cast<std::size_t>(config.full_batch_limit);
    const std::size_t batch = full_batch ? n : static_cast<std::size_t>(config.batch_size);

    mlpdetail::Adam adam(params);
    const Activation act = config.activation;
    double lr = config.learning_rate_init;
    double best_train = std::numeric_limits<double>::infinity();
    int train_stall = 0;
    double best_val = std::numeric_limits<double>::infinity();
    int val_stall = 0;
    mlpdetail::Params best = params;
    TrainingHistory history;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<Eigen::MatrixXd> gw;
    std::vector<Eigen::VectorXd> gb;
    Eigen::MatrixXd xb;
    Eigen::RowVectorXd yb;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        if (!full_batch) {
            Rng rng(seed, /*stream=*/0xba7c, static_cast<std::uint64_t>(epoch));
            rng.shuffle(order);
        }
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            if (full_batch) {
                const double batch_loss = mlpdetail::batch_gradients(params, act, xtr, ytr, gw, gb);
                if (!std::isfinite(batch_loss))
                    throw NumericError("mlp_train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
            } else {
                xb.resize(xtr.rows(), static_cast<Eigen::Index>(count));
                yb.resize(static_cast<Eigen::Index>(count));
                for (std::size_t i = 0; i < count; ++i) {
                    const auto src = static_cast<Eigen::Index>(order[start + i]);
                    xb.col(static_cast<Eigen::Index>(i)) = xtr.col(src);
                    yb(static_cast<Eigen::Index>(i)) = ytr(src);
                }
                const double batch_loss = mlpdetail::batch_gradients(params, act, xb, yb, gw, gb);
                if (!std::isfinite(batch_loss))
                    throw NumericError("mlp_train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
            }
            adam.step(params, gw, gb, lr);
        }
        const double train_loss = mlpdetail::dataset_loss(params, act, xtr, ytr);
        const double val_loss = mlpdetail::dataset_loss(params, act, xval, yval);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
            throw NumericError("mlp_train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
        history.curve.emplace_back(train_loss, val_loss);
        history.epochs = epoch;

        if (train_loss > best_train - config.tol) {
            if (++train_stall >= 2) {
                lr /= 5.0;
                train_stall = 0;
            }
        } else {
            train_stall = 0;
        }
        best_train = std::min(best_train, train_loss);

        if (val_loss < best_val - config.tol) {
            best_val = val_loss;
            best = params;
            val_stall = 0;
        } else if (++val_stall >= config.patience) {
            break;
        }
    }

    MlpModel result(schema, y_mean, y_std, config.activation, best.w, best.b);
    history.best_val_loss = best_val;
    result.mutable_history() = history;
    return result;
}

// Backpropagation check: analytic gradients of the squared-error loss
// (f(x) - y)^2 against central finite differences with step h, across every
// parameter. Returns the largest relative discrepancy (denominator floored
// at 1e-3 so vanishing gradients do not inflate finite-difference noise).
inline double mlp_gradient_check(const MlpModel& model, std::span<const double> x_raw, double y_raw,
                                 double h = 1e-5) {
    if (!(h > 0.0)) throw UsageError("mlp_gradient_check: h must be positive");
    const auto z = model.schema().standardize(x_raw);
    Eigen::MatrixXd x(z.size(), 1);
    for (std::size_t i = 0; i < z.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = z[i];
    Eigen::RowVectorXd y(1);
    y(0) = (y_raw - model.y_mean()) / model.y_std();

    const Activation act = model.activation();
    std::vector<Eigen::MatrixXd> gw;
    std::vector<Eigen::VectorXd> gb;
    mlpdetail::batch_gradients(model.params(), act, x, y, gw, gb);

    mlpdetail::Params probe = model.params();
    double max_rel = 0.0;
    auto check = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double lp = mlpdetail::dataset_loss(probe, act, x, y);
        param = saved - h;
        const double lm = mlpdetail::dataset_loss(probe, act, x, y);
        param = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
        max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    };
    for (std::size_t l = 0; l < probe.w.size(); ++l) {
        for (Eigen::Index r = 0; r < probe.w[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < probe.w[l].cols(); ++c) check(probe.w[l](r, c), gw[l](r, c));
        }
        for (Eigen::Index r = 0; r < probe.b[l].size(); ++r) check(probe.b[l](r), gb[l](r));
    }
    return max_rel;
}

// Smallest |pre-activation| across hidden units; relu gradient checks skip
// inputs that sit within a margin of a kink.
inline double mlp_min_preactivation(const MlpModel& model, std::span<const double> x_raw) {
    const auto z = model.schema().standardize(x_raw);
    Eigen::MatrixXd x(z.size(), 1);
    for (std::size_t i = 0; i < z.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = z[i];
    const auto fp = mlpdetail::forward(model.params(), model.activation(), x);
    double min_abs = std::numeric_limits<double>::infinity();
    // The last pre-activation feeds the linear output unit and has no kink.
    for (std::size_t l = 0; l + 1 < fp.pre_activations.size(); ++l) {
        min_abs = std::min(min_abs, fp.pre_activations[l].cwiseAbs().minCoeff());
    }
    return min_abs;
}

}  // namespace windxai
