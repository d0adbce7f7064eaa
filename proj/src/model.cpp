#include "aki/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "aki/metrics.hpp"
#include "aki/rng.hpp"

namespace aki {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec relu(const Vec& v) { return v.cwiseMax(0.0); }

Vec relu_grad_mask(const Vec& pre) {
    return (pre.array() > 0.0).cast<double>().matrix();
}

void glorot_fill(Mat& m, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-a, a);
}

void axpy(ModelParams& acc, const ModelParams& g, double a) {
    acc.w_static += a * g.w_static;
    acc.b_static += a * g.b_static;
    acc.w_z += a * g.w_z;
    acc.w_r += a * g.w_r;
    acc.w_h += a * g.w_h;
    acc.u_z += a * g.u_z;
    acc.u_r += a * g.u_r;
    acc.u_h += a * g.u_h;
    acc.b_z += a * g.b_z;
    acc.b_r += a * g.b_r;
    acc.b_h += a * g.b_h;
    acc.w_head += a * g.w_head;
    acc.b_head += a * g.b_head;
    acc.w_out += a * g.w_out;
    acc.b_out += a * g.b_out;
}

}  // namespace

ModelParams ModelParams::zeros(int d_static, int d_dyn, int hidden) {
    ModelParams p;
    p.w_static = Mat::Zero(d_static, hidden);
    p.b_static = Vec::Zero(hidden);
    p.w_z = Mat::Zero(d_dyn, hidden);
    p.w_r = Mat::Zero(d_dyn, hidden);
    p.w_h = Mat::Zero(d_dyn, hidden);
    p.u_z = Mat::Zero(hidden, hidden);
    p.u_r = Mat::Zero(hidden, hidden);
    p.u_h = Mat::Zero(hidden, hidden);
    p.b_z = Vec::Zero(hidden);
    p.b_r = Vec::Zero(hidden);
    p.b_h = Vec::Zero(hidden);
    p.w_head = Mat::Zero(2 * hidden, hidden);
    p.b_head = Vec::Zero(hidden);
    p.w_out = Vec::Zero(hidden);
    p.b_out = 0.0;
    return p;
}

ModelParams ModelParams::init(int d_static, int d_dyn, int hidden, std::uint64_t seed) {
    ModelParams p = zeros(d_static, d_dyn, hidden);
    Rng rng(seed);
    glorot_fill(p.w_static, rng);
    glorot_fill(p.w_z, rng);
    glorot_fill(p.w_r, rng);
    glorot_fill(p.w_h, rng);
    glorot_fill(p.u_z, rng);
    glorot_fill(p.u_r, rng);
    glorot_fill(p.u_h, rng);
    glorot_fill(p.w_head, rng);
    {
        const double a = std::sqrt(6.0 / static_cast<double>(hidden + 1));
        for (long i = 0; i < p.w_out.size(); ++i) p.w_out[i] = rng.uniform(-a, a);
    }
    return p;
}

std::vector<Mat*> ModelParams::matrices() {
    return {&w_static, &w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &w_head};
}

std::vector<Vec*> ModelParams::vectors() {
    return {&b_static, &b_z, &b_r, &b_h, &b_head, &w_out};
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 1;  // b_out
    auto* self = const_cast<ModelParams*>(this);
    for (const auto* m : self->matrices()) n += static_cast<std::size_t>(m->size());
    for (const auto* v : self->vectors()) n += static_cast<std::size_t>(v->size());
    return n;
}

ClassWeights compute_class_weights(const std::vector<EncounterTensor>& development) {
    std::size_t n = 0, n_pos = 0;
    for (const auto& t : development)
        for (auto y : t.labels) {
            ++n;
            n_pos += y != 0;
        }
    const std::size_t n_neg = n - n_pos;
    ClassWeights w;
    if (n_pos > 0) w.w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(n_pos));
    if (n_neg > 0) w.w_neg = static_cast<double>(n) / (2.0 * static_cast<double>(n_neg));
    return w;
}

Vec gru_cell(const ModelParams& p, const Vec& x_t, const Vec& h_prev) {
    if (x_t.size() != p.w_z.rows() || h_prev.size() != p.u_z.rows())
        throw std::invalid_argument("gru_cell: shape mismatch");
    const Vec z = (p.w_z.transpose() * x_t + p.u_z.transpose() * h_prev + p.b_z)
                      .unaryExpr([](double v) { return sigmoid(v); });
    const Vec r = (p.w_r.transpose() * x_t + p.u_r.transpose() * h_prev + p.b_r)
                      .unaryExpr([](double v) { return sigmoid(v); });
    const Vec h_tilde =
        (p.w_h.transpose() * x_t + p.u_h.transpose() * r.cwiseProduct(h_prev) + p.b_h)
            .unaryExpr([](double v) { return std::tanh(v); });
    return (Vec::Ones(h_prev.size()) - z).cwiseProduct(h_prev) + z.cwiseProduct(h_tilde);
}

DropoutPlan DropoutPlan::none(int hidden, int steps) {
    DropoutPlan plan;
    plan.static_mask = Vec::Ones(hidden);
    plan.head_masks.assign(static_cast<std::size_t>(steps), Vec::Ones(hidden));
    return plan;
}

DropoutPlan DropoutPlan::sample(int hidden, int steps, double rate, std::uint64_t seed) {
    if (rate <= 0.0) return none(hidden, steps);
    Rng rng(seed);
    const double keep = 1.0 - rate;
    auto draw = [&]() {
        Vec mask(hidden);
        for (int i = 0; i < hidden; ++i) mask[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
        return mask;
    };
    DropoutPlan plan;
    plan.static_mask = draw();
    for (int t = 0; t < steps; ++t) plan.head_masks.push_back(draw());
    return plan;
}

std::vector<double> forward(const ModelParams& p, const Vec& static_vec,
                            const std::vector<Vec>& steps, const DropoutPlan& plan,
                            ForwardCache* cache) {
    if (static_vec.size() != p.w_static.rows())
        throw std::invalid_argument("forward: static dimension mismatch");
    const int hidden = p.hidden();

    const Vec static_pre = p.w_static.transpose() * static_vec + p.b_static;
    const Vec s = relu(static_pre).cwiseProduct(plan.static_mask);

    if (cache) {
        cache->static_input = static_vec;
        cache->static_pre = static_pre;
        cache->s = s;
        cache->x.clear();
        cache->h.clear();
        cache->z.clear();
        cache->r.clear();
        cache->h_tilde.clear();
        cache->head_pre.clear();
        cache->head_act.clear();
        cache->logit.clear();
        cache->prob.clear();
    }

    std::vector<double> probs;
    Vec h = Vec::Zero(hidden);
    for (std::size_t t = 0; t < steps.size(); ++t) {
        const Vec& x = steps[t];
        if (x.size() != p.w_z.rows()) throw std::invalid_argument("forward: step dimension mismatch");
        const Vec z = (p.w_z.transpose() * x + p.u_z.transpose() * h + p.b_z)
                          .unaryExpr([](double v) { return sigmoid(v); });
        const Vec r = (p.w_r.transpose() * x + p.u_r.transpose() * h + p.b_r)
                          .unaryExpr([](double v) { return sigmoid(v); });
        const Vec h_tilde = (p.w_h.transpose() * x + p.u_h.transpose() * r.cwiseProduct(h) + p.b_h)
                                .unaryExpr([](double v) { return std::tanh(v); });
        const Vec h_new = (Vec::Ones(hidden) - z).cwiseProduct(h) + z.cwiseProduct(h_tilde);

        Vec cat(2 * hidden);
        cat << s, h_new;
        const Vec head_pre = p.w_head.transpose() * cat + p.b_head;
        const Vec head_act = relu(head_pre).cwiseProduct(plan.head_masks[t]);
        const double logit = p.w_out.dot(head_act) + p.b_out;
        const double prob = sigmoid(logit);
        probs.push_back(prob);

        if (cache) {
            cache->x.push_back(x);
            cache->z.push_back(z);
            cache->r.push_back(r);
            cache->h_tilde.push_back(h_tilde);
            cache->h.push_back(h_new);
            cache->head_pre.push_back(head_pre);
            cache->head_act.push_back(head_act);
            cache->logit.push_back(logit);
            cache->prob.push_back(prob);
        }
        h = h_new;
    }
    return probs;
}

Gradients Gradients::zeros(int d_static, int d_dyn, int hidden, int steps) {
    Gradients g;
    g.g = ModelParams::zeros(d_static, d_dyn, hidden);
    g.d_static_input = Vec::Zero(d_static);
    g.d_dyn_input.assign(static_cast<std::size_t>(steps), Vec::Zero(d_dyn));
    return g;
}

Gradients backward(const ModelParams& p, const ForwardCache& cache, const DropoutPlan& plan,
                   const std::vector<double>& dloss_dlogit) {
    const int hidden = p.hidden();
    const auto steps = static_cast<int>(cache.x.size());
    Gradients out = Gradients::zeros(p.d_static(), p.d_dyn(), hidden, steps);
    ModelParams& g = out.g;

    Vec ds_total = Vec::Zero(hidden);
    Vec dh_next = Vec::Zero(hidden);
    for (int t = steps - 1; t >= 0; --t) {
        const auto ut = static_cast<std::size_t>(t);
        const double dlogit = dloss_dlogit[ut];

        g.w_out += cache.head_act[ut] * dlogit;
        g.b_out += dlogit;
        Vec dhead_act = p.w_out * dlogit;
        dhead_act = dhead_act.cwiseProduct(plan.head_masks[ut]);
        const Vec dhead_pre = dhead_act.cwiseProduct(relu_grad_mask(cache.head_pre[ut]));

        Vec cat(2 * hidden);
        cat << cache.s, cache.h[ut];
        g.w_head += cat * dhead_pre.transpose();
        g.b_head += dhead_pre;
        const Vec dcat = p.w_head * dhead_pre;
        ds_total += dcat.head(hidden);
        Vec dh = dcat.tail(hidden) + dh_next;

        const Vec h_prev = t > 0 ? cache.h[ut - 1] : Vec::Zero(hidden);
        const Vec& z = cache.z[ut];
        const Vec& r = cache.r[ut];
        const Vec& h_tilde = cache.h_tilde[ut];
        const Vec& x = cache.x[ut];

        const Vec dz = dh.cwiseProduct(h_tilde - h_prev);
        const Vec dh_tilde = dh.cwiseProduct(z);
        Vec dh_prev = dh.cwiseProduct(Vec::Ones(hidden) - z);

        const Vec da_h = dh_tilde.cwiseProduct(
            (Vec::Ones(hidden) - h_tilde.cwiseProduct(h_tilde)));
        g.w_h += x * da_h.transpose();
        g.b_h += da_h;
        g.u_h += r.cwiseProduct(h_prev) * da_h.transpose();
        const Vec drh = p.u_h * da_h;
        const Vec dr = drh.cwiseProduct(h_prev);
        dh_prev += drh.cwiseProduct(r);

        const Vec da_r = dr.cwiseProduct(r).cwiseProduct(Vec::Ones(hidden) - r);
        g.w_r += x * da_r.transpose();
        g.b_r += da_r;
        g.u_r += h_prev * da_r.transpose();
        dh_prev += p.u_r * da_r;

        const Vec da_z = dz.cwiseProduct(z).cwiseProduct(Vec::Ones(hidden) - z);
        g.w_z += x * da_z.transpose();
        g.b_z += da_z;
        g.u_z += h_prev * da_z.transpose();
        dh_prev += p.u_z * da_z;

        out.d_dyn_input[ut] = p.w_z * da_z + p.w_r * da_r + p.w_h * da_h;
        dh_next = dh_prev;
    }

    // the static representation feeds every step; one accumulated pass here
    ds_total = ds_total.cwiseProduct(plan.static_mask);
    const Vec dstatic_pre = ds_total.cwiseProduct(relu_grad_mask(cache.static_pre));
    g.w_static += cache.static_input * dstatic_pre.transpose();
    g.b_static += dstatic_pre;
    out.d_static_input = p.w_static * dstatic_pre;
    return out;
}

Gradients input_gradients(const ModelParams& p, const Vec& static_vec,
                          const std::vector<Vec>& steps, int step) {
    if (step < 0 || step >= static_cast<int>(steps.size()))
        throw std::invalid_argument("input_gradients: step out of range");
    // truncate the sequence after `step`; later steps cannot influence it
    std::vector<Vec> prefix(steps.begin(), steps.begin() + step + 1);
    ForwardCache cache;
    const auto plan = DropoutPlan::none(p.hidden(), static_cast<int>(prefix.size()));
    const auto probs = forward(p, static_vec, prefix, plan, &cache);
    std::vector<double> seed(prefix.size(), 0.0);
    const double prob = probs[static_cast<std::size_t>(step)];
    seed[static_cast<std::size_t>(step)] = prob * (1.0 - prob);  // dF/dlogit for F = sigmoid
    auto grads = backward(p, cache, plan, seed);
    return grads;
}

double weighted_bce(const std::vector<double>& probs, const std::vector<std::uint8_t>& labels,
                    const ClassWeights& w) {
    if (probs.size() != labels.size())
        throw std::invalid_argument("weighted_bce: size mismatch");
    if (probs.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], 1e-12, 1.0 - 1e-12);
        const double y = labels[i] ? 1.0 : 0.0;
        const double weight = labels[i] ? w.w_pos : w.w_neg;
        total += -weight * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    return total / static_cast<double>(probs.size());
}

AdamState AdamState::zeros(int d_static, int d_dyn, int hidden) {
    AdamState s;
    s.m = ModelParams::zeros(d_static, d_dyn, hidden);
    s.v = ModelParams::zeros(d_static, d_dyn, hidden);
    return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamConfig& cfg) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));

    auto update_mat = [&](Mat& w, const Mat& g, Mat& m, Mat& v) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        w.array() -= cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon);
    };
    auto update_vec = [&](Vec& w, const Vec& g, Vec& m, Vec& v) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        w.array() -= cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon);
    };

    ModelParams& m = state.m;
    ModelParams& v = state.v;
    ModelParams& g = const_cast<ModelParams&>(grads);
    auto wm = params.matrices();
    auto gm = g.matrices();
    auto mm = m.matrices();
    auto vm = v.matrices();
    for (std::size_t i = 0; i < wm.size(); ++i) update_mat(*wm[i], *gm[i], *mm[i], *vm[i]);
    auto wv = params.vectors();
    auto gv = g.vectors();
    auto mv = m.vectors();
    auto vv = v.vectors();
    for (std::size_t i = 0; i < wv.size(); ++i) update_vec(*wv[i], *gv[i], *mv[i], *vv[i]);

    m.b_out = cfg.beta1 * m.b_out + (1.0 - cfg.beta1) * grads.b_out;
    v.b_out = cfg.beta2 * v.b_out + (1.0 - cfg.beta2) * grads.b_out * grads.b_out;
    params.b_out -= cfg.learning_rate * (m.b_out / bc1) / (std::sqrt(v.b_out / bc2) + cfg.epsilon);
}

namespace {

// validation AUPRC over all windows (training convention)
double validation_auprc_all_windows(const ModelParams& params,
                                    const std::vector<EncounterTensor>& validation) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& t : validation) {
        const auto plan = DropoutPlan::none(params.hidden(), static_cast<int>(t.steps.size()));
        const auto probs = forward(params, t.static_vec, t.steps, plan);
        for (std::size_t k = 0; k < probs.size(); ++k) {
            scores.push_back(probs[k]);
            labels.push_back(t.labels[k]);
        }
    }
    return average_precision(scores, labels).value_or(0.0);
}

}  // namespace

Checkpoint train(const std::vector<EncounterTensor>& development,
                 const std::vector<EncounterTensor>& validation, const TrainConfig& cfg,
                 const std::string& schema_hash, TrainDiagnostics* diag) {
    if (development.empty() || validation.empty())
        throw std::invalid_argument("train: development and validation sets must be nonempty");
    const int d_static = static_cast<int>(development[0].static_vec.size());
    const int d_dyn = development[0].steps.empty()
                          ? (validation[0].steps.empty() ? 0 : static_cast<int>(validation[0].steps[0].size()))
                          : static_cast<int>(development[0].steps[0].size());

    ModelParams params = ModelParams::init(d_static, d_dyn, cfg.hidden, cfg.seed);
    AdamState adam = AdamState::zeros(d_static, d_dyn, cfg.hidden);
    AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    const ClassWeights weights =
        cfg.class_weighting ? compute_class_weights(development) : ClassWeights{};

    ModelParams best = params;
    double best_auprc = -1.0;
    int best_epoch = -1;
    int stall = 0;
    int epochs_run = 0;

    std::vector<std::size_t> order(development.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        epochs_run = epoch;
        Rng shuffle_rng(substream_seed(cfg.seed, 0x5affULL + static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        Rng dropout_rng(substream_seed(cfg.seed, 0xd0ULL + static_cast<std::uint64_t>(epoch)));

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::size_t total_windows = 0;
            for (std::size_t i = start; i < stop; ++i)
                total_windows += development[order[i]].steps.size();
            if (total_windows == 0) continue;

            ModelParams batch_grad = ModelParams::zeros(d_static, d_dyn, cfg.hidden);
            for (std::size_t i = start; i < stop; ++i) {
                const auto& t = development[order[i]];
                if (t.steps.empty()) continue;
                const auto plan =
                    DropoutPlan::sample(cfg.hidden, static_cast<int>(t.steps.size()), cfg.dropout,
                                        dropout_rng.next_u64());
                ForwardCache cache;
                const auto probs = forward(params, t.static_vec, t.steps, plan, &cache);
                std::vector<double> dlogit(probs.size());
                for (std::size_t k = 0; k < probs.size(); ++k) {
                    const double y = t.labels[k] ? 1.0 : 0.0;
                    const double w = t.labels[k] ? weights.w_pos : weights.w_neg;
                    dlogit[k] = w * (probs[k] - y) / static_cast<double>(total_windows);
                }
                const auto grads = backward(params, cache, plan, dlogit);
                axpy(batch_grad, grads.g, 1.0);
            }
            adam_step(params, batch_grad, adam, adam_cfg);
        }

        const double val_auprc = validation_auprc_all_windows(params, validation);
        if (diag) diag->validation_auprc_by_epoch.push_back(val_auprc);
        if (val_auprc > best_auprc) {
            best_auprc = val_auprc;
            best = params;
            best_epoch = epoch;
            stall = 0;
        } else {
            stall += 1;
            if (stall >= cfg.patience) break;
        }
    }

    Checkpoint ckpt;
    ckpt.kind = ModelKind::RECURRENT;
    ckpt.params = best;
    ckpt.schema_hash = schema_hash;
    ckpt.config = cfg;
    ckpt.epochs_run = epochs_run;
    ckpt.best_epoch = best_epoch;
    ckpt.best_validation_auprc = best_auprc;
    return ckpt;
}

std::vector<std::vector<double>> predict(const Checkpoint& ckpt,
                                         const std::vector<EncounterTensor>& tensors,
                                         const std::string& schema_hash) {
    if (!schema_hash.empty() && !ckpt.schema_hash.empty() && ckpt.schema_hash != schema_hash)
        throw std::invalid_argument("predict: schema hash mismatch (checkpoint " +
                                    ckpt.schema_hash + " vs tensors " + schema_hash + ")");
    std::vector<std::vector<double>> out;
    out.reserve(tensors.size());
    for (const auto& t : tensors) {
        std::vector<double> probs;
        if (ckpt.kind == ModelKind::RECURRENT) {
            const auto plan =
                DropoutPlan::none(ckpt.params.hidden(), static_cast<int>(t.steps.size()));
            probs = forward(ckpt.params, t.static_vec, t.steps, plan);
        } else {
            probs.assign(t.steps.size(), std::numeric_limits<double>::quiet_NaN());
            for (std::size_t k = kBaselineHistoryWindows - 1; k < t.steps.size(); ++k) {
                const Vec phi = baseline_features(t, static_cast<int>(k));
                probs[k] = sigmoid(ckpt.logistic_w.dot(phi) + ckpt.logistic_b);
            }
        }
        if (ckpt.calibrator)
            for (auto& p : probs)
                if (!std::isnan(p)) p = ckpt.calibrator->apply(p);
        out.push_back(std::move(probs));
    }
    return out;
}

Vec baseline_features(const EncounterTensor& t, int step) {
    if (step < kBaselineHistoryWindows - 1)
        throw std::invalid_argument("baseline_features: needs 48 h of history");
    const long d_static = t.static_vec.size();
    const long d_dyn = t.steps.empty() ? 0 : t.steps[0].size();
    Vec phi(d_static + kBaselineHistoryWindows * d_dyn);
    phi.head(d_static) = t.static_vec;
    for (int j = 0; j < kBaselineHistoryWindows; ++j) {
        const auto& step_vec = t.steps[static_cast<std::size_t>(step - kBaselineHistoryWindows + 1 + j)];
        phi.segment(d_static + j * d_dyn, d_dyn) = step_vec;
    }
    return phi;
}

Checkpoint train_logistic_baseline(const std::vector<EncounterTensor>& development,
                                   const std::vector<EncounterTensor>& validation,
                                   const TrainConfig& cfg, const std::string& schema_hash,
                                   TrainDiagnostics* diag) {
    if (development.empty() || validation.empty())
        throw std::invalid_argument("train_logistic_baseline: empty inputs");
    const long d_static = development[0].static_vec.size();
    long d_dyn = 0;
    for (const auto& t : development)
        if (!t.steps.empty()) {
            d_dyn = t.steps[0].size();
            break;
        }
    const long dim = d_static + kBaselineHistoryWindows * d_dyn;

    const ClassWeights weights =
        cfg.class_weighting ? compute_class_weights(development) : ClassWeights{};

    Vec w;
    {
        Rng rng(cfg.seed);
        const double a = std::sqrt(6.0 / static_cast<double>(dim + 1));
        w = Vec::Zero(dim);
        for (long i = 0; i < dim; ++i) w[i] = rng.uniform(-a, a);
    }
    double b = 0.0;
    Vec m = Vec::Zero(dim), v = Vec::Zero(dim);
    double mb = 0.0, vb = 0.0;
    std::int64_t step_count = 0;
    AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;

    auto val_auprc_fn = [&]() {
        std::vector<double> scores;
        std::vector<int> labels;
        for (const auto& t : validation)
            for (std::size_t k = kBaselineHistoryWindows - 1; k < t.steps.size(); ++k) {
                scores.push_back(sigmoid(w.dot(baseline_features(t, static_cast<int>(k))) + b));
                labels.push_back(t.labels[k]);
            }
        return average_precision(scores, labels).value_or(0.0);
    };

    Vec best_w = w;
    double best_b = b, best_auprc = -1.0;
    int best_epoch = -1, stall = 0, epochs_run = 0;
    std::vector<std::size_t> order(development.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        epochs_run = epoch;
        Rng shuffle_rng(substream_seed(cfg.seed, 0x10995ULL + static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::size_t total = 0;
            for (std::size_t i = start; i < stop; ++i) {
                const auto& t = development[order[i]];
                if (t.steps.size() >= kBaselineHistoryWindows)
                    total += t.steps.size() - (kBaselineHistoryWindows - 1);
            }
            if (total == 0) continue;
            Vec gw = Vec::Zero(dim);
            double gb = 0.0;
            for (std::size_t i = start; i < stop; ++i) {
                const auto& t = development[order[i]];
                for (std::size_t k = kBaselineHistoryWindows - 1; k < t.steps.size(); ++k) {
                    const Vec phi = baseline_features(t, static_cast<int>(k));
                    const double p = sigmoid(w.dot(phi) + b);
                    const double y = t.labels[k] ? 1.0 : 0.0;
                    const double cw = t.labels[k] ? weights.w_pos : weights.w_neg;
                    const double d = cw * (p - y) / static_cast<double>(total);
                    gw += d * phi;
                    gb += d;
                }
            }
            step_count += 1;
            const double bc1 = 1.0 - std::pow(adam_cfg.beta1, static_cast<double>(step_count));
            const double bc2 = 1.0 - std::pow(adam_cfg.beta2, static_cast<double>(step_count));
            m = adam_cfg.beta1 * m + (1.0 - adam_cfg.beta1) * gw;
            v = adam_cfg.beta2 * v + (1.0 - adam_cfg.beta2) * gw.cwiseProduct(gw);
            w.array() -=
                adam_cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + adam_cfg.epsilon);
            mb = adam_cfg.beta1 * mb + (1.0 - adam_cfg.beta1) * gb;
            vb = adam_cfg.beta2 * vb + (1.0 - adam_cfg.beta2) * gb * gb;
            b -= adam_cfg.learning_rate * (mb / bc1) / (std::sqrt(vb / bc2) + adam_cfg.epsilon);
        }
        const double val = val_auprc_fn();
        if (diag) diag->validation_auprc_by_epoch.push_back(val);
        if (val > best_auprc) {
            best_auprc = val;
            best_w = w;
            best_b = b;
            best_epoch = epoch;
            stall = 0;
        } else if (++stall >= cfg.patience) {
            break;
        }
    }

    Checkpoint ckpt;
    ckpt.kind = ModelKind::LOGISTIC;
    ckpt.params = ModelParams::zeros(1, 1, 1);
    ckpt.logistic_w = best_w;
    ckpt.logistic_b = best_b;
    ckpt.schema_hash = schema_hash;
    ckpt.config = cfg;
    ckpt.epochs_run = epochs_run;
    ckpt.best_epoch = best_epoch;
    ckpt.best_validation_auprc = best_auprc;
    return ckpt;
}

// ---- checkpoint serialization ----

namespace {

constexpr char kCkptMagic[8] = {'A', 'K', 'I', 'C', 'K', 'P', 'T', '1'};

void put_str(std::ofstream& out, const std::string& s) {
    const auto len = static_cast<std::uint32_t>(s.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::ifstream& in) {
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

void put_mat(std::ofstream& out, const std::string& name, const Mat& m) {
    put_str(out, name);
    const auto rows = static_cast<std::uint32_t>(m.rows());
    const auto cols = static_cast<std::uint32_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c) {
            const double v = m(r, c);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
}

Mat get_mat(std::ifstream& in, std::string& name) {
    name = get_str(in);
    std::uint32_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    Mat m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c) {
            double v = 0;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            m(r, c) = v;
        }
    return m;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kCkptMagic, sizeof(kCkptMagic));
    const std::uint8_t kind_byte = kind == ModelKind::RECURRENT ? 0 : 1;
    out.write(reinterpret_cast<const char*>(&kind_byte), 1);
    put_str(out, schema_hash);

    auto put_i32 = [&](std::int32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
    auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
    auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
    put_i32(config.batch_size);
    put_f64(config.learning_rate);
    put_f64(config.dropout);
    put_i32(config.patience);
    put_i32(config.max_epochs);
    put_i32(config.hidden);
    put_u64(config.seed);
    put_i32(config.class_weighting ? 1 : 0);
    put_i32(epochs_run);
    put_i32(best_epoch);
    put_f64(best_validation_auprc);

    if (kind == ModelKind::RECURRENT) {
        const std::uint32_t n_tensors = 15;
        out.write(reinterpret_cast<const char*>(&n_tensors), sizeof(n_tensors));
        put_mat(out, "w_static", params.w_static);
        put_mat(out, "b_static", params.b_static);
        put_mat(out, "w_z", params.w_z);
        put_mat(out, "w_r", params.w_r);
        put_mat(out, "w_h", params.w_h);
        put_mat(out, "u_z", params.u_z);
        put_mat(out, "u_r", params.u_r);
        put_mat(out, "u_h", params.u_h);
        put_mat(out, "b_z", params.b_z);
        put_mat(out, "b_r", params.b_r);
        put_mat(out, "b_h", params.b_h);
        put_mat(out, "w_head", params.w_head);
        put_mat(out, "b_head", params.b_head);
        put_mat(out, "w_out", params.w_out);
        put_mat(out, "b_out", Mat::Constant(1, 1, params.b_out));
    } else {
        const std::uint32_t n_tensors = 2;
        out.write(reinterpret_cast<const char*>(&n_tensors), sizeof(n_tensors));
        put_mat(out, "logistic_w", logistic_w);
        put_mat(out, "logistic_b", Mat::Constant(1, 1, logistic_b));
    }

    const std::uint8_t has_cal = calibrator ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&has_cal), 1);
    if (calibrator) {
        const auto n = static_cast<std::uint32_t>(calibrator->breakpoints.size());
        out.write(reinterpret_cast<const char*>(&n), sizeof(n));
        for (double v : calibrator->breakpoints) put_f64(v);
        for (double v : calibrator->values) put_f64(v);
    }
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);

    Checkpoint ckpt;
    std::uint8_t kind_byte = 0;
    in.read(reinterpret_cast<char*>(&kind_byte), 1);
    ckpt.kind = kind_byte == 0 ? ModelKind::RECURRENT : ModelKind::LOGISTIC;
    ckpt.schema_hash = get_str(in);

    auto get_i32 = [&]() {
        std::int32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    };
    auto get_u64 = [&]() {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    };
    auto get_f64 = [&]() {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    };
    ckpt.config.batch_size = get_i32();
    ckpt.config.learning_rate = get_f64();
    ckpt.config.dropout = get_f64();
    ckpt.config.patience = get_i32();
    ckpt.config.max_epochs = get_i32();
    ckpt.config.hidden = get_i32();
    ckpt.config.seed = get_u64();
    ckpt.config.class_weighting = get_i32() != 0;
    ckpt.epochs_run = get_i32();
    ckpt.best_epoch = get_i32();
    ckpt.best_validation_auprc = get_f64();

    std::uint32_t n_tensors = 0;
    in.read(reinterpret_cast<char*>(&n_tensors), sizeof(n_tensors));
    std::map<std::string, Mat> tensors;
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        std::string name;
        Mat m = get_mat(in, name);
        tensors.emplace(std::move(name), std::move(m));
    }
    if (ckpt.kind == ModelKind::RECURRENT) {
        ckpt.params.w_static = tensors.at("w_static");
        ckpt.params.b_static = tensors.at("b_static");
        ckpt.params.w_z = tensors.at("w_z");
        ckpt.params.w_r = tensors.at("w_r");
        ckpt.params.w_h = tensors.at("w_h");
        ckpt.params.u_z = tensors.at("u_z");
        ckpt.params.u_r = tensors.at("u_r");
        ckpt.params.u_h = tensors.at("u_h");
        ckpt.params.b_z = tensors.at("b_z");
        ckpt.params.b_r = tensors.at("b_r");
        ckpt.params.b_h = tensors.at("b_h");
        ckpt.params.w_head = tensors.at("w_head");
        ckpt.params.b_head = tensors.at("b_head");
        ckpt.params.w_out = tensors.at("w_out");
        ckpt.params.b_out = tensors.at("b_out")(0, 0);
    } else {
        ckpt.logistic_w = tensors.at("logistic_w");
        ckpt.logistic_b = tensors.at("logistic_b")(0, 0);
        ckpt.params = ModelParams::zeros(1, 1, 1);
    }

    std::uint8_t has_cal = 0;
    in.read(reinterpret_cast<char*>(&has_cal), 1);
    if (has_cal) {
        std::uint32_t n = 0;
        in.read(reinterpret_cast<char*>(&n), sizeof(n));
        IsotonicCalibrator cal;
        cal.breakpoints.resize(n);
        cal.values.resize(n);
        for (auto& v : cal.breakpoints) v = get_f64();
        for (auto& v : cal.values) v = get_f64();
        ckpt.calibrator = std::move(cal);
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return ckpt;
}

}  // namespace aki
