#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aki/features.hpp"
#include "aki/isotonic.hpp"

namespace aki {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// All learnable parameters. Input weight matrices are stored (d_in x hidden)
// and applied transposed, recurrent matrices (hidden x hidden).
struct ModelParams {
    Mat w_static;  // d_static x hidden
    Vec b_static;
    Mat w_z, w_r, w_h;  // d_dyn x hidden
    Mat u_z, u_r, u_h;  // hidden x hidden
    Vec b_z, b_r, b_h;
    Mat w_head;  // 2*hidden x hidden
    Vec b_head;
    Vec w_out;  // hidden
    double b_out = 0.0;

    int hidden() const { return static_cast<int>(b_static.size()); }
    int d_static() const { return static_cast<int>(w_static.rows()); }
    int d_dyn() const { return static_cast<int>(w_z.rows()); }

    // Glorot-uniform matrices, zero biases.
    static ModelParams init(int d_static, int d_dyn, int hidden, std::uint64_t seed);
    static ModelParams zeros(int d_static, int d_dyn, int hidden);

    // flat views for the optimizer and finite-difference checks
    std::vector<Mat*> matrices();
    std::vector<Vec*> vectors();
    std::size_t parameter_count() const;
};

struct TrainConfig {
    int batch_size = 64;  // encounters per batch
    double learning_rate = 1e-3;
    double dropout = 0.20;
    int patience = 3;
    int max_epochs = 100;
    int hidden = 64;
    std::uint64_t seed = 1;
    bool class_weighting = true;
    // early stopping metric is validation AUPRC over all windows
};

struct ClassWeights {
    double w_pos = 1.0;
    double w_neg = 1.0;
};

// w(1) = N / (2 N_pos), w(0) = N / (2 N_neg), computed on development windows.
ClassWeights compute_class_weights(const std::vector<EncounterTensor>& development);

Vec gru_cell(const ModelParams& p, const Vec& x_t, const Vec& h_prev);

enum class RunMode { TRAIN, INFER };

// Per-encounter dropout plan: one mask for the static representation and one
// per step for the head input (inverted scaling baked in).
struct DropoutPlan {
    Vec static_mask;
    std::vector<Vec> head_masks;

    static DropoutPlan none(int hidden, int steps);
    static DropoutPlan sample(int hidden, int steps, double rate, std::uint64_t seed);
};

struct ForwardCache {
    Vec static_input;
    Vec static_pre;  // pre-relu static activation
    Vec s;           // post relu+dropout static representation
    std::vector<Vec> x, h, z, r, h_tilde;
    std::vector<Vec> head_pre, head_act;  // pre-relu and post relu+dropout
    std::vector<double> logit;
    std::vector<double> prob;
};

// Risk sequence in (0,1), one value per step.
std::vector<double> forward(const ModelParams& p, const Vec& static_vec,
                            const std::vector<Vec>& steps, const DropoutPlan& plan,
                            ForwardCache* cache = nullptr);

struct Gradients {
    ModelParams g;          // same shapes as the parameters
    Vec d_static_input;     // gradient w.r.t. the static input
    std::vector<Vec> d_dyn_input;  // per-step gradient w.r.t. dynamic inputs

    static Gradients zeros(int d_static, int d_dyn, int hidden, int steps);
    void add_scaled(const Gradients& other, double scale);
};

// Backpropagation through time for the weighted BCE over one encounter,
// using per-window step_weight * (p - y) at the output. Pass step_weights
// of w(y)/W for training loss gradients.
Gradients backward(const ModelParams& p, const ForwardCache& cache, const DropoutPlan& plan,
                   const std::vector<double>& dloss_dlogit);

// Gradients of a single step's sigmoid output w.r.t. all inputs (used by
// attribution): backward pass seeded with dF/dlogit = p (1 - p) at `step`.
Gradients input_gradients(const ModelParams& p, const Vec& static_vec,
                          const std::vector<Vec>& steps, int step);

double weighted_bce(const std::vector<double>& probs, const std::vector<std::uint8_t>& labels,
                    const ClassWeights& w);

struct AdamState {
    ModelParams m, v;
    std::int64_t t = 0;

    static AdamState zeros(int d_static, int d_dyn, int hidden);
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamConfig& cfg);

enum class ModelKind { RECURRENT, LOGISTIC };

struct Checkpoint {
    ModelKind kind = ModelKind::RECURRENT;
    ModelParams params;            // recurrent model
    Vec logistic_w;                // baseline weights
    double logistic_b = 0.0;
    std::optional<IsotonicCalibrator> calibrator;
    std::string schema_hash;
    TrainConfig config;
    int epochs_run = 0;
    int best_epoch = -1;
    double best_validation_auprc = 0.0;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

struct TrainDiagnostics {
    std::vector<double> validation_auprc_by_epoch;
};

Checkpoint train(const std::vector<EncounterTensor>& development,
                 const std::vector<EncounterTensor>& validation, const TrainConfig& cfg,
                 const std::string& schema_hash, TrainDiagnostics* diag = nullptr);

// Per-window probabilities in encounter order; calibrated when the
// checkpoint carries a calibrator. Refuses mismatched schema hashes.
std::vector<std::vector<double>> predict(const Checkpoint& ckpt,
                                         const std::vector<EncounterTensor>& tensors,
                                         const std::string& schema_hash);

// Logistic baseline over [static || last 4 windows of dynamics]; only
// windows with at least 48 h of history are used.
constexpr int kBaselineHistoryWindows = 4;

Vec baseline_features(const EncounterTensor& t, int step);
Checkpoint train_logistic_baseline(const std::vector<EncounterTensor>& development,
                                   const std::vector<EncounterTensor>& validation,
                                   const TrainConfig& cfg, const std::string& schema_hash,
                                   TrainDiagnostics* diag = nullptr);

}  // namespace aki
