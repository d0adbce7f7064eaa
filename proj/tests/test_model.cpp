#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "aki/metrics.hpp"
#include "aki/model.hpp"
#include "aki/rng.hpp"

using namespace aki;

namespace {

EncounterTensor toy_tensor(Rng& rng, int d_static, int d_dyn, int steps, double pos_rate = 0.4) {
    EncounterTensor t;
    static int counter = 0;
    t.encounter_id = "tt" + std::to_string(counter++);
    t.patient_id = t.encounter_id;
    t.static_vec = Vec::NullaryExpr(d_static, [&](Eigen::Index) { return rng.normal(); });
    for (int k = 0; k < steps; ++k)
        t.steps.push_back(Vec::NullaryExpr(d_dyn, [&](Eigen::Index) { return rng.normal(); }));
    for (int k = 0; k < steps; ++k) {
        t.labels.push_back(rng.bernoulli(pos_rate) ? 1 : 0);
        t.already_severe.push_back(0);
        t.censored.push_back(0);
    }
    return t;
}

// loss of a small batch with dropout disabled; shared by the finite-difference check
double batch_loss(const ModelParams& params, const std::vector<EncounterTensor>& batch,
                  const ClassWeights& weights) {
    double total = 0.0;
    std::size_t windows = 0;
    for (const auto& t : batch) windows += t.steps.size();
    for (const auto& t : batch) {
        const auto plan = DropoutPlan::none(params.hidden(), static_cast<int>(t.steps.size()));
        const auto probs = forward(params, t.static_vec, t.steps, plan);
        for (std::size_t k = 0; k < probs.size(); ++k) {
            const double p = std::clamp(probs[k], 1e-12, 1.0 - 1e-12);
            const double y = t.labels[k] ? 1.0 : 0.0;
            const double w = t.labels[k] ? weights.w_pos : weights.w_neg;
            total += -w * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        }
    }
    return total / static_cast<double>(windows);
}

ModelParams analytic_batch_gradient(const ModelParams& params,
                                    const std::vector<EncounterTensor>& batch,
                                    const ClassWeights& weights) {
    std::size_t windows = 0;
    for (const auto& t : batch) windows += t.steps.size();
    ModelParams total = ModelParams::zeros(params.d_static(), params.d_dyn(), params.hidden());
    for (const auto& t : batch) {
        const auto plan = DropoutPlan::none(params.hidden(), static_cast<int>(t.steps.size()));
        ForwardCache cache;
        const auto probs = forward(params, t.static_vec, t.steps, plan, &cache);
        std::vector<double> dlogit(probs.size());
        for (std::size_t k = 0; k < probs.size(); ++k) {
            const double y = t.labels[k] ? 1.0 : 0.0;
            const double w = t.labels[k] ? weights.w_pos : weights.w_neg;
            dlogit[k] = w * (probs[k] - y) / static_cast<double>(windows);
        }
        const auto g = backward(params, cache, plan, dlogit);
        total.w_static += g.g.w_static;
        total.b_static += g.g.b_static;
        total.w_z += g.g.w_z;
        total.w_r += g.g.w_r;
        total.w_h += g.g.w_h;
        total.u_z += g.g.u_z;
        total.u_r += g.g.u_r;
        total.u_h += g.g.u_h;
        total.b_z += g.g.b_z;
        total.b_r += g.g.b_r;
        total.b_h += g.g.b_h;
        total.w_head += g.g.w_head;
        total.b_head += g.g.b_head;
        total.w_out += g.g.w_out;
        total.b_out += g.g.b_out;
    }
    return total;
}

// central finite differences over every coordinate
double max_relative_gradient_error(ModelParams params, const std::vector<EncounterTensor>& batch,
                                   const ClassWeights& weights, double eps = 1e-5) {
    const ModelParams analytic = analytic_batch_gradient(params, batch, weights);
    auto* mutable_analytic = const_cast<ModelParams*>(&analytic);

    double worst = 0.0;
    auto check_coord = [&](double* w, double g) {
        const double saved = *w;
        *w = saved + eps;
        const double up = batch_loss(params, batch, weights);
        *w = saved - eps;
        const double down = batch_loss(params, batch, weights);
        *w = saved;
        const double fd = (up - down) / (2.0 * eps);
        const double denom = std::max({std::abs(fd), std::abs(g), 1e-8});
        worst = std::max(worst, std::abs(fd - g) / denom);
    };

    auto mats = params.matrices();
    auto gmats = mutable_analytic->matrices();
    for (std::size_t i = 0; i < mats.size(); ++i)
        for (long j = 0; j < mats[i]->size(); ++j)
            check_coord(mats[i]->data() + j, gmats[i]->data()[j]);
    auto vecs = params.vectors();
    auto gvecs = mutable_analytic->vectors();
    for (std::size_t i = 0; i < vecs.size(); ++i)
        for (long j = 0; j < vecs[i]->size(); ++j)
            check_coord(vecs[i]->data() + j, gvecs[i]->data()[j]);
    check_coord(&params.b_out, analytic.b_out);
    return worst;
}

}  // namespace

TEST_CASE("gru cell analytic collapses") {
    ModelParams p = ModelParams::zeros(3, 4, 5);
    Vec x = Vec::Ones(4);
    Vec h = Vec::Constant(5, 0.8);
    // zero weights: z = 0.5, candidate = 0, so h_new = 0.5 h
    Vec h_new = gru_cell(p, x, h);
    for (int i = 0; i < 5; ++i) CHECK(h_new[i] == doctest::Approx(0.4));
    Vec h0 = Vec::Zero(5);
    CHECK(gru_cell(p, x, h0).norm() == 0.0);
}

TEST_CASE("gru cell matches a scalar-by-scalar re-implementation") {
    Rng rng(3);
    const int d = 3, hidden = 4;
    ModelParams p = ModelParams::init(5, d, hidden, 99);
    for (int trial = 0; trial < 20; ++trial) {
        Vec x = Vec::NullaryExpr(d, [&](Eigen::Index) { return rng.normal(); });
        Vec h = Vec::NullaryExpr(hidden, [&](Eigen::Index) { return rng.normal(); });
        const Vec got = gru_cell(p, x, h);

        auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        auto gate = [&](const Mat& w, const Mat& u, const Vec& bias, int j) {
            double a = bias[j];
            for (int i = 0; i < d; ++i) a += w(i, j) * x[i];
            for (int i = 0; i < hidden; ++i) a += u(i, j) * h[i];
            return sigmoid(a);
        };
        for (int j = 0; j < hidden; ++j) {
            const double z = gate(p.w_z, p.u_z, p.b_z, j);
            // reset gate applies elementwise to h before the recurrent product
            double ah = p.b_h[j];
            for (int i = 0; i < d; ++i) ah += p.w_h(i, j) * x[i];
            for (int i = 0; i < hidden; ++i)
                ah += p.u_h(i, j) * gate(p.w_r, p.u_r, p.b_r, i) * h[i];
            const double expect = (1.0 - z) * h[j] + z * std::tanh(ah);
            CHECK(got[j] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("forward with zero parameters outputs one half") {
    ModelParams p = ModelParams::zeros(3, 4, 8);
    Rng rng(5);
    Vec s = Vec::NullaryExpr(3, [&](Eigen::Index) { return rng.normal(); });
    std::vector<Vec> steps{Vec::Ones(4), Vec::Zero(4)};
    const auto probs = forward(p, s, steps, DropoutPlan::none(8, 2));
    REQUIRE(probs.size() == 2);
    CHECK(probs[0] == 0.5);
    CHECK(probs[1] == 0.5);
}

TEST_CASE("infer mode is deterministic; seeded dropout reproducible") {
    Rng rng(6);
    ModelParams p = ModelParams::init(5, 6, 8, 1234);
    auto t = toy_tensor(rng, 5, 6, 4);
    const auto a = forward(p, t.static_vec, t.steps, DropoutPlan::none(8, 4));
    const auto b = forward(p, t.static_vec, t.steps, DropoutPlan::none(8, 4));
    CHECK(a == b);
    const auto plan1 = DropoutPlan::sample(8, 4, 0.2, 777);
    const auto plan2 = DropoutPlan::sample(8, 4, 0.2, 777);
    const auto c = forward(p, t.static_vec, t.steps, plan1);
    const auto d = forward(p, t.static_vec, t.steps, plan2);
    CHECK(c == d);
    CHECK(a != c);
}

TEST_CASE("empty step sequence yields empty output") {
    ModelParams p = ModelParams::init(3, 4, 8, 5);
    CHECK(forward(p, Vec::Zero(3), {}, DropoutPlan::none(8, 0)).empty());
}

TEST_CASE("weighted bce") {
    ClassWeights balanced;
    CHECK(weighted_bce({0.5, 0.5}, {1, 0}, balanced) == doctest::Approx(-std::log(0.5)));
    // p = y after clamping gives ~0 loss
    CHECK(weighted_bce({1.0, 0.0}, {1, 0}, balanced) == doctest::Approx(0.0).epsilon(1e-9));
    ClassWeights w{5.0, 0.5555555555555556};
    const double loss = weighted_bce({0.3}, {1}, w);
    CHECK(loss == doctest::Approx(-5.0 * std::log(0.3)));
}

TEST_CASE("class weights formula") {
    Rng rng(7);
    std::vector<EncounterTensor> dev;
    EncounterTensor t = toy_tensor(rng, 2, 2, 100);
    for (int i = 0; i < 100; ++i) t.labels[static_cast<std::size_t>(i)] = i < 10 ? 1 : 0;
    dev.push_back(t);
    const auto w = compute_class_weights(dev);
    CHECK(w.w_pos == doctest::Approx(5.0));
    CHECK(w.w_neg == doctest::Approx(100.0 / 180.0));
}

TEST_CASE("analytic gradients match central finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        const int d_static = 4, d_dyn = 5, hidden = 6;
        ModelParams p = ModelParams::init(d_static, d_dyn, hidden, seed * 31 + 7);
        std::vector<EncounterTensor> batch{toy_tensor(rng, d_static, d_dyn, 3),
                                           toy_tensor(rng, d_static, d_dyn, 3)};
        ClassWeights weights{1.7, 0.8};
        const double err = max_relative_gradient_error(p, batch, weights);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("gradients with a fixed dropout mask also match finite differences") {
    Rng rng(17);
    const int d_static = 3, d_dyn = 4, hidden = 5;
    ModelParams p = ModelParams::init(d_static, d_dyn, hidden, 11);
    auto t = toy_tensor(rng, d_static, d_dyn, 3);
    const auto plan = DropoutPlan::sample(hidden, 3, 0.4, 99);
    ClassWeights w;

    auto loss_fn = [&](const ModelParams& params) {
        const auto probs = forward(params, t.static_vec, t.steps, plan);
        double total = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k) {
            const double pc = std::clamp(probs[k], 1e-12, 1.0 - 1e-12);
            const double y = t.labels[k] ? 1.0 : 0.0;
            total += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
        }
        return total / static_cast<double>(probs.size());
    };

    ForwardCache cache;
    const auto probs = forward(p, t.static_vec, t.steps, plan, &cache);
    std::vector<double> dlogit(probs.size());
    for (std::size_t k = 0; k < probs.size(); ++k)
        dlogit[k] = (probs[k] - (t.labels[k] ? 1.0 : 0.0)) / static_cast<double>(probs.size());
    auto g = backward(p, cache, plan, dlogit);

    const double eps = 1e-5;
    double worst = 0.0;
    auto mats = p.matrices();
    auto gmats = g.g.matrices();
    for (std::size_t i = 0; i < mats.size(); ++i)
        for (long j = 0; j < std::min<long>(mats[i]->size(), 10); ++j) {
            double* w_ptr = mats[i]->data() + j;
            const double saved = *w_ptr;
            *w_ptr = saved + eps;
            const double up = loss_fn(p);
            *w_ptr = saved - eps;
            const double down = loss_fn(p);
            *w_ptr = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double denom = std::max({std::abs(fd), std::abs(gmats[i]->data()[j]), 1e-8});
            worst = std::max(worst, std::abs(fd - gmats[i]->data()[j]) / denom);
        }
    CHECK(worst < 1e-4);
}

TEST_CASE("zero-weight model on a balanced batch has zero output-bias gradient") {
    Rng rng(19);
    ModelParams p = ModelParams::zeros(2, 3, 4);
    EncounterTensor t = toy_tensor(rng, 2, 3, 4);
    t.labels = {1, 0, 1, 0};
    ClassWeights w;
    const auto g = analytic_batch_gradient(p, {t}, w);
    CHECK(g.b_out == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("duplicating a batch leaves the mean gradient unchanged") {
    Rng rng(23);
    ModelParams p = ModelParams::init(3, 4, 5, 71);
    ClassWeights w{2.0, 0.7};
    auto a = toy_tensor(rng, 3, 4, 3);
    auto b = toy_tensor(rng, 3, 4, 5);
    const auto g1 = analytic_batch_gradient(p, {a, b}, w);
    const auto g2 = analytic_batch_gradient(p, {a, b, a, b}, w);
    CHECK((g1.w_z - g2.w_z).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g1.w_static - g2.w_static).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(g1.b_out - g2.b_out) < 1e-12);
}

TEST_CASE("batch gradient is invariant to encounter order") {
    Rng rng(29);
    ModelParams p = ModelParams::init(3, 4, 5, 72);
    ClassWeights w;
    auto a = toy_tensor(rng, 3, 4, 3);
    auto b = toy_tensor(rng, 3, 4, 4);
    const auto g1 = analytic_batch_gradient(p, {a, b}, w);
    const auto g2 = analytic_batch_gradient(p, {b, a}, w);
    CHECK((g1.u_h - g2.u_h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adam first step moves by about the learning rate against the gradient") {
    ModelParams p = ModelParams::zeros(2, 2, 3);
    ModelParams g = ModelParams::zeros(2, 2, 3);
    g.b_static << 0.3, -0.2, 0.001;
    AdamState state = AdamState::zeros(2, 2, 3);
    AdamConfig cfg;
    adam_step(p, g, state, cfg);
    for (int i = 0; i < 3; ++i) {
        const double delta = p.b_static[i];
        CHECK(std::abs(delta) <= cfg.learning_rate + 1e-12);
        CHECK(std::abs(delta) >= cfg.learning_rate * (1.0 - 1e-4));
        CHECK(std::signbit(delta) != std::signbit(g.b_static[i]));
    }
}

TEST_CASE("adam with zero gradients leaves parameters unchanged") {
    ModelParams p = ModelParams::init(2, 2, 3, 5);
    const ModelParams copy = p;
    ModelParams g = ModelParams::zeros(2, 2, 3);
    AdamState state = AdamState::zeros(2, 2, 3);
    AdamConfig cfg;
    for (int i = 0; i < 5; ++i) adam_step(p, g, state, cfg);
    CHECK((p.w_z - copy.w_z).cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.b_out == copy.b_out);
}

TEST_CASE("adam descends a quadratic bowl") {
    // f(w) = ||w||^2 on the b_static block
    ModelParams p = ModelParams::zeros(2, 2, 3);
    p.b_static << 1.0, -2.0, 0.5;
    AdamState state = AdamState::zeros(2, 2, 3);
    AdamConfig cfg;
    cfg.learning_rate = 0.05;
    double prev = p.b_static.squaredNorm();
    for (int i = 0; i < 10; ++i) {
        ModelParams g = ModelParams::zeros(2, 2, 3);
        g.b_static = 2.0 * p.b_static;
        adam_step(p, g, state, cfg);
        const double now = p.b_static.squaredNorm();
        CHECK(now < prev);
        prev = now;
    }
}

TEST_CASE("training learns a planted linear signal and is deterministic") {
    // outcome driven by the first dynamic feature
    auto make_set = [&](std::uint64_t seed, int n) {
        Rng rng(seed);
        std::vector<EncounterTensor> out;
        for (int i = 0; i < n; ++i) {
            auto t = toy_tensor(rng, 3, 4, 5);
            for (std::size_t k = 0; k < t.steps.size(); ++k)
                t.labels[k] = t.steps[k][0] + 0.3 * rng.normal() > 0.4 ? 1 : 0;
            out.push_back(std::move(t));
        }
        return out;
    };
    const auto dev = make_set(100, 80);
    const auto val = make_set(200, 40);
    TrainConfig cfg;
    cfg.hidden = 8;
    cfg.max_epochs = 12;
    cfg.batch_size = 16;
    cfg.seed = 5;
    TrainDiagnostics diag;
    const auto ckpt = train(dev, val, cfg, "h1", &diag);
    REQUIRE(!diag.validation_auprc_by_epoch.empty());

    // beats the untrained model
    const auto probs = predict(ckpt, val, "h1");
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < val.size(); ++i)
        for (std::size_t k = 0; k < probs[i].size(); ++k) {
            scores.push_back(probs[i][k]);
            labels.push_back(val[i].labels[k]);
        }
    const ModelParams init = ModelParams::init(3, 4, cfg.hidden, cfg.seed);
    std::vector<double> scores0;
    for (const auto& t : val) {
        const auto p0 = forward(init, t.static_vec, t.steps,
                                DropoutPlan::none(cfg.hidden, static_cast<int>(t.steps.size())));
        scores0.insert(scores0.end(), p0.begin(), p0.end());
    }
    CHECK(*average_precision(scores, labels) > *average_precision(scores0, labels));

    const auto ckpt2 = train(dev, val, cfg, "h1", nullptr);
    CHECK(ckpt.best_validation_auprc == ckpt2.best_validation_auprc);
    const auto probs2 = predict(ckpt2, val, "h1");
    CHECK(probs == probs2);
}

TEST_CASE("early stopping keeps the best epoch under the patience rule") {
    // patience accounting mirrors: 0.30, 0.29, 0.29, 0.29 stops after epoch 4
    std::vector<double> sequence{0.30, 0.29, 0.29, 0.29, 0.50};
    int best_epoch = -1, stall = 0, stopped_at = -1;
    double best = -1.0;
    const int patience = 3;
    for (int epoch = 1; epoch <= static_cast<int>(sequence.size()); ++epoch) {
        const double v = sequence[static_cast<std::size_t>(epoch - 1)];
        if (v > best) {
            best = v;
            best_epoch = epoch;
            stall = 0;
        } else if (++stall >= patience) {
            stopped_at = epoch;
            break;
        }
    }
    CHECK(best_epoch == 1);
    CHECK(stopped_at == 4);
}

TEST_CASE("checkpoint round trip reproduces predictions bit for bit") {
    Rng rng(31);
    const auto dev = std::vector<EncounterTensor>{toy_tensor(rng, 3, 4, 4), toy_tensor(rng, 3, 4, 5)};
    const auto val = std::vector<EncounterTensor>{toy_tensor(rng, 3, 4, 3)};
    TrainConfig cfg;
    cfg.hidden = 6;
    cfg.max_epochs = 3;
    auto ckpt = train(dev, val, cfg, "hash123");
    ckpt.calibrator = IsotonicCalibrator{{0.2, 0.6}, {0.1, 0.9}};
    ckpt.save("t_ckpt.bin");
    const auto loaded = Checkpoint::load("t_ckpt.bin");
    std::remove("t_ckpt.bin");
    CHECK(loaded.schema_hash == "hash123");
    CHECK(loaded.kind == ModelKind::RECURRENT);
    REQUIRE(loaded.calibrator.has_value());
    CHECK(predict(ckpt, val, "hash123") == predict(loaded, val, "hash123"));
}

TEST_CASE("predict refuses a schema hash mismatch") {
    Rng rng(37);
    const auto dev = std::vector<EncounterTensor>{toy_tensor(rng, 3, 4, 4)};
    TrainConfig cfg;
    cfg.hidden = 4;
    cfg.max_epochs = 1;
    const auto ckpt = train(dev, dev, cfg, "aaa");
    CHECK_THROWS_AS(predict(ckpt, dev, "bbb"), std::invalid_argument);
}

TEST_CASE("zero-parameter checkpoint predicts one half everywhere") {
    Rng rng(41);
    Checkpoint ckpt;
    ckpt.kind = ModelKind::RECURRENT;
    ckpt.params = ModelParams::zeros(3, 4, 5);
    const auto t = toy_tensor(rng, 3, 4, 6);
    const auto probs = predict(ckpt, {t}, "");
    for (double p : probs[0]) CHECK(p == 0.5);
}

TEST_CASE("calibrated prediction applies the step function") {
    Rng rng(43);
    Checkpoint ckpt;
    ckpt.kind = ModelKind::RECURRENT;
    ckpt.params = ModelParams::zeros(3, 4, 5);
    ckpt.calibrator = IsotonicCalibrator{{0.1, 0.4}, {0.2, 0.8}};
    const auto t = toy_tensor(rng, 3, 4, 2);
    const auto probs = predict(ckpt, {t}, "");
    for (double p : probs[0]) CHECK(p == 0.8);  // raw 0.5 falls in the upper block
}

TEST_CASE("logistic baseline: capacity, gradients, eligibility") {
    // linearly separable toy set on the first static feature
    Rng rng(47);
    auto make = [&](int n) {
        std::vector<EncounterTensor> out;
        for (int i = 0; i < n; ++i) {
            auto t = toy_tensor(rng, 2, 2, 6);
            for (std::size_t k = 0; k < t.steps.size(); ++k)
                t.labels[k] = t.static_vec[0] > 0 ? 1 : 0;
            out.push_back(std::move(t));
        }
        return out;
    };
    const auto dev = make(60);
    const auto val = make(30);
    TrainConfig cfg;
    cfg.max_epochs = 60;
    cfg.patience = 60;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 16;
    const auto ckpt = train_logistic_baseline(dev, val, cfg, "h");

    const auto probs = predict(ckpt, dev, "h");
    std::size_t correct = 0, total = 0;
    for (std::size_t i = 0; i < dev.size(); ++i)
        for (std::size_t k = 0; k < probs[i].size(); ++k) {
            if (std::isnan(probs[i][k])) {
                CHECK(k < kBaselineHistoryWindows - 1);  // pre-48 h windows are excluded
                continue;
            }
            total++;
            correct += (probs[i][k] >= 0.5 ? 1 : 0) == dev[i].labels[k];
        }
    CHECK(static_cast<double>(correct) / static_cast<double>(total) > 0.95);

    // finite differences on the logistic loss
    Rng grng(53);
    const auto t = toy_tensor(grng, 2, 2, 5);
    Vec w = Vec::NullaryExpr(2 + kBaselineHistoryWindows * 2, [&](Eigen::Index) { return grng.normal(); });
    double b = 0.1;
    auto loss = [&](const Vec& wv, double bv) {
        double total_loss = 0.0;
        int count = 0;
        for (std::size_t k = kBaselineHistoryWindows - 1; k < t.steps.size(); ++k) {
            const Vec phi = baseline_features(t, static_cast<int>(k));
            const double p = 1.0 / (1.0 + std::exp(-(wv.dot(phi) + bv)));
            const double y = t.labels[k] ? 1.0 : 0.0;
            total_loss += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
            count++;
        }
        return total_loss / count;
    };
    Vec grad = Vec::Zero(w.size());
    {
        int count = 0;
        for (std::size_t k = kBaselineHistoryWindows - 1; k < t.steps.size(); ++k) count++;
        for (std::size_t k = kBaselineHistoryWindows - 1; k < t.steps.size(); ++k) {
            const Vec phi = baseline_features(t, static_cast<int>(k));
            const double p = 1.0 / (1.0 + std::exp(-(w.dot(phi) + b)));
            grad += (p - (t.labels[k] ? 1.0 : 0.0)) / count * phi;
        }
    }
    const double eps = 1e-6;
    for (long j = 0; j < w.size(); ++j) {
        Vec up = w, down = w;
        up[j] += eps;
        down[j] -= eps;
        const double fd = (loss(up, b) - loss(down, b)) / (2 * eps);
        CHECK(std::abs(fd - grad[j]) / std::max({std::abs(fd), std::abs(grad[j]), 1e-8}) < 1e-6);
    }
}
