#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "windxai/mlp.hpp"
#include "windxai/synth.hpp"

using namespace windxai;

namespace {

ScadaRecord rec(double v, double rho, double ti, double power) {
    ScadaRecord r;
    r.v_w = v;
    r.rho = rho;
    r.ti = ti;
    r.power = power;
    return r;
}

FeatureSchema identity_schema(std::vector<Feature> feats) {
    FeatureSchema s;
    s.features = std::move(feats);
    s.mean.assign(s.features.size(), 0.0);
    s.std.assign(s.features.size(), 1.0);
    return s;
}

MlpModel random_model(std::vector<int> hidden, Activation act, std::uint64_t seed, int d = 3) {
    Rng rng(seed);
    std::vector<int> dims;
    dims.push_back(d);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(1);
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Eigen::MatrixXd m(dims[l + 1], dims[l]);
        Eigen::VectorXd v(dims[l + 1]);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.normal(0.0, 0.8);
            v(r) = rng.normal(0.0, 0.3);
        }
        w.push_back(m);
        b.push_back(v);
    }
    std::vector<Feature> feats{Feature::WindSpeed, Feature::AirDensity, Feature::TurbulenceIntensity,
                               Feature::YawMisalignment};
    feats.resize(d);
    return MlpModel(identity_schema(feats), 0.0, 1.0, act, std::move(w), std::move(b));
}

}  // namespace

TEST_CASE("fit_scaler uses the population convention") {
    Records train{rec(1.0, 1.0, 0.1, 100), rec(3.0, 1.4, 0.3, 200)};
    FeatureSchema schema{{Feature::WindSpeed}, {}, {}};
    const auto fitted = fit_scaler(train, schema);
    CHECK(fitted.mean[0] == 2.0);
    CHECK(fitted.std[0] == 1.0);
}

TEST_CASE("fit_scaler rejects constant features") {
    Records train{rec(5.0, 1.2, 0.1, 100), rec(5.0, 1.3, 0.2, 200)};
    FeatureSchema schema{{Feature::WindSpeed}, {}, {}};
    CHECK_THROWS_AS(fit_scaler(train, schema), DataError);
}

TEST_CASE("scaler fit on train ignores test statistics") {
    Records train{rec(1.0, 1.0, 0.1, 0), rec(3.0, 1.1, 0.2, 0)};
    Records test{rec(10.0, 1.0, 0.1, 0), rec(30.0, 1.1, 0.2, 0)};
    FeatureSchema schema{{Feature::WindSpeed}, {}, {}};
    const auto on_train = fit_scaler(train, schema);
    const auto on_test = fit_scaler(test, schema);
    CHECK(on_train.mean[0] != on_test.mean[0]);  // refitting changes parameters
    CHECK(on_train.mean[0] == 2.0);
}

TEST_CASE("standardization round-trips") {
    Records train;
    Rng rng(8);
    for (int i = 0; i < 100; ++i)
        train.push_back(rec(rng.uniform(3, 20), rng.uniform(1.0, 1.4), rng.uniform(0.02, 0.4), 0));
    const auto schema = fit_scaler(train, base_schema());
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> x{rng.uniform(3, 20), rng.uniform(1.0, 1.4), rng.uniform(0.02, 0.4)};
        const auto back = schema.unstandardize(schema.standardize(x));
        for (std::size_t f = 0; f < x.size(); ++f)
            CHECK(std::abs(back[f] - x[f]) <= 1e-12 * std::max(1.0, std::abs(x[f])));
    }
}

TEST_CASE("zero-weight network predicts the target-scaling offset") {
    std::vector<Eigen::MatrixXd> w{Eigen::MatrixXd::Zero(3, 1), Eigen::MatrixXd::Zero(1, 3)};
    std::vector<Eigen::VectorXd> b{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(1)};
    MlpModel m(identity_schema({Feature::WindSpeed}), 512.5, 100.0, Activation::Logistic, w, b);
    const std::vector<double> x{3.7};
    CHECK(m.predict(x) == 512.5);
}

TEST_CASE("single logistic unit matches a hand-computed forward pass") {
    std::vector<Eigen::MatrixXd> w(2);
    std::vector<Eigen::VectorXd> b(2);
    w[0] = Eigen::MatrixXd::Constant(1, 1, 0.7);
    b[0] = Eigen::VectorXd::Constant(1, -0.1);
    w[1] = Eigen::MatrixXd::Constant(1, 1, 2.0);
    b[1] = Eigen::VectorXd::Constant(1, 0.5);
    MlpModel m(identity_schema({Feature::WindSpeed}), 0.0, 1.0, Activation::Logistic, w, b);
    const std::vector<double> x{0.3};
    const double hidden = 1.0 / (1.0 + std::exp(-(0.7 * 0.3 - 0.1)));
    const double expected = 2.0 * hidden + 0.5;
    CHECK(std::abs(m.predict(x) - expected) < 1e-12);
}

TEST_CASE("batched forward equals per-column forward") {
    const auto m = random_model({4, 3}, Activation::Relu, 17);
    Eigen::MatrixXd x(3, 5);
    Rng rng(4);
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = rng.normal();
    const auto batch = mlpdetail::forward(m.params(), m.activation(), x);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const std::vector<double> xi{x(0, c), x(1, c), x(2, c)};
        CHECK(m.predict(xi) == batch.activations.back()(0, c));
    }
}

TEST_CASE("mlp_predict rejects schema mismatches") {
    const auto m = random_model({3}, Activation::Logistic, 5);
    const std::vector<double> wrong{1.0, 2.0};
    CHECK_THROWS_AS(m.predict(wrong), UsageError);
}

TEST_CASE("mlp_train fits a noiseless line") {
    Records train, val;
    for (int i = 0; i < 100; ++i) {
        const double x = static_cast<double>(i) / 99.0;
        (i % 5 == 0 ? val : train).push_back(rec(x, 1.2, 0.1, 2.0 * x));
    }
    MlpConfig cfg;
    cfg.features = {Feature::WindSpeed};
    cfg.hidden = {3, 3};
    cfg.activation = Activation::Logistic;
    const auto model = mlp_train(cfg, train, val, 1);

    double mse = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double x = (i + 0.5) / 50.0;
        const double e = model.predict(std::vector<double>{x}) - 2.0 * x;
        mse += e * e;
    }
    mse /= 50.0;
    CHECK(mse < 1e-3);
}

TEST_CASE("mlp_train is deterministic given the seed") {
    Records train, val;
    Rng rng(10);
    for (int i = 0; i < 300; ++i) {
        const double v = rng.uniform(3, 15);
        const auto r = rec(v, rng.uniform(1.1, 1.35), rng.uniform(0.03, 0.3), 10.0 * v * v);
        (i % 5 == 0 ? val : train).push_back(r);
    }
    MlpConfig cfg = MlpConfig::ann_small(base_schema().features);
    cfg.max_epochs = 200;
    const auto a = mlp_train(cfg, train, val, 42);
    const auto b = mlp_train(cfg, train, val, 42);
    for (std::size_t l = 0; l < a.weights().size(); ++l) {
        CHECK((a.weights()[l] - b.weights()[l]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.biases()[l] - b.biases()[l]).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(a.history().epochs == b.history().epochs);
}

TEST_CASE("early stopping restores the best validation loss") {
    Records train, val;
    Rng rng(12);
    for (int i = 0; i < 400; ++i) {
        const double v = rng.uniform(3, 15);
        const double p = 40.0 * v + rng.normal(0.0, 15.0);
        (i % 5 == 0 ? val : train).push_back(rec(v, 1.2, 0.1, p));
    }
    MlpConfig cfg = MlpConfig::ann_small({Feature::WindSpeed});
    cfg.max_epochs = 500;
    const auto model = mlp_train(cfg, train, val, 3);
    REQUIRE_FALSE(model.history().curve.empty());
    const double final_val = model.history().curve.back().second;
    CHECK(model.history().best_val_loss <= final_val + 1e-12);
}

TEST_CASE("mlp_train aborts on divergence with a diagnostic") {
    Records train, val;
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        const double v = rng.uniform(3, 15);
        (i % 5 == 0 ? val : train).push_back(rec(v, 1.2, 0.1, 40.0 * v));
    }
    MlpConfig cfg = MlpConfig::ann_small({Feature::WindSpeed});
    cfg.learning_rate_init = 1e200;  // drive the parameters to overflow
    cfg.max_epochs = 50;
    CHECK_THROWS_AS(mlp_train(cfg, train, val, 1), NumericError);
}

TEST_CASE("gradient check passes for both activations across seeds") {
    for (const auto act : {Activation::Logistic, Activation::Relu}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto m = random_model({4, 3}, act, 100 + seed);
            Rng rng(seed);
            std::vector<double> x(3);
            double min_pre = 0.0;
            do {
                for (auto& v : x) v = rng.normal();
                min_pre = mlp_min_preactivation(m, x);
            } while (act == Activation::Relu && min_pre < 1e-3);  // keep clear of kinks
            const double y = m.predict(x) - 1.5;  // nonzero residual
            CHECK(mlp_gradient_check(m, x, y, 1e-5) < 1e-5);
        }
    }
}

TEST_CASE("gradient check on a linear network is exact to rounding") {
    // no hidden layers: the loss is quadratic in the parameters
    std::vector<Eigen::MatrixXd> w{Eigen::MatrixXd::Zero(1, 2)};
    w[0] << 1.5, -0.7;
    std::vector<Eigen::VectorXd> b{Eigen::VectorXd::Constant(1, 0.2)};
    MlpModel m(identity_schema({Feature::WindSpeed, Feature::AirDensity}), 0.0, 1.0,
               Activation::Logistic, w, b);
    const std::vector<double> x{0.4, -1.1};
    CHECK(mlp_gradient_check(m, x, 2.0, 1e-5) < 1e-8);
}

TEST_CASE("ann presets match the published configurations") {
    const auto small = MlpConfig::ann_small(base_schema().features);
    CHECK(small.hidden == std::vector<int>{3, 3});
    CHECK(small.activation == Activation::Logistic);
    const auto large = MlpConfig::ann_large(base_schema().features);
    CHECK(large.hidden == std::vector<int>{100, 100, 25});
    CHECK(large.activation == Activation::Relu);
    CHECK(small.learning_rate_init == 0.1);
    CHECK(small.patience == 100);
    CHECK(small.max_epochs == 10000);
    CHECK(small.tol == 1e-6);
}
