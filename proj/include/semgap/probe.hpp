#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semgap/features.hpp"
#include "semgap/tensorstore.hpp"

namespace semgap {

// Per-dimension z-score fitted on a training split. Empty means identity.
struct Standardizer {
    Vector mean;
    Vector scale;

    bool empty() const noexcept { return mean.empty(); }
    static Standardizer fit(std::span<const FeatureRow> rows);
    Vector apply(std::span<const double> x) const;

    bool operator==(const Standardizer&) const = default;
};

// softmax(W x + b) over `class_labels`. W is C x F, row-major.
struct ProbeModel {
    std::size_t num_classes = 0;
    std::size_t feature_dim = 0;
    Vector weights;
    Vector bias;
    std::vector<std::string> class_labels;
    Standardizer standardizer;
    std::map<std::string, std::string> trained_on;

    static ProbeModel zeros(std::vector<std::string> class_labels, std::size_t feature_dim);

    double& weight(std::size_t c, std::size_t f) { return weights[c * feature_dim + f]; }
    double weight(std::size_t c, std::size_t f) const { return weights[c * feature_dim + f]; }

    // Flat view used by the optimizer and gradient checks: W row-major, then b.
    Vector parameters() const;
    void set_parameters(std::span<const double> flat);
    std::size_t parameter_count() const noexcept { return num_classes * (feature_dim + 1); }

    // Throws DataError when the invariants (C >= 2, sizes, finiteness) fail.
    void validate() const;

    bool operator==(const ProbeModel&) const = default;
};

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t max_epochs = 200;
    double l2_lambda = 1e-4;
    std::uint64_t seed = 0;
    std::size_t early_stop_patience = 10;
    double tolerance = 1e-7;
    bool standardize = true;
    // Names for class indices 0..C-1; numeric names when empty.
    std::vector<std::string> class_labels;
    // Copied into ProbeModel::trained_on (task, model_id, ...).
    std::map<std::string, std::string> metadata;
};

struct LossAndGradient {
    double loss = 0.0;
    Vector gradient;  // same layout as ProbeModel::parameters()
};

struct TrainTrace {
    std::vector<double> train_loss;      // one entry per accepted step, starting at the initial loss
    std::vector<double> monitor_accuracy;  // dev (or train, when dev is empty) accuracy per evaluation
    std::size_t epochs = 0;
    std::size_t best_epoch = 0;
    std::string stop_reason;
};

struct TrainOutcome {
    ProbeModel model;
    TrainTrace trace;
};

struct Confidence {
    std::size_t predicted_class = 0;
    double confidence = 0.0;
};

Vector logits(const ProbeModel& model, std::span<const double> features);
Vector predict_proba(const ProbeModel& model, std::span<const double> features);

// Mean negative log-likelihood plus (l2_lambda / 2) * ||W||^2 with its
// analytic gradient. The model's standardizer is applied to each row first.
LossAndGradient cross_entropy_loss(const ProbeModel& model, std::span<const FeatureRow> rows,
                                   double l2_lambda);

// Zero-initialized full-batch gradient descent with early stopping on dev
// accuracy (train accuracy when dev is empty). A step that would raise the
// training loss is rejected and retried at half the learning rate. Final
// parameters are rounded to float32 so that archive round-trips are exact.
TrainOutcome train_probe_traced(std::span<const FeatureRow> train_rows, std::span<const FeatureRow> dev_rows,
                                const TrainConfig& config);
ProbeModel train_probe(std::span<const FeatureRow> train_rows, std::span<const FeatureRow> dev_rows,
                       const TrainConfig& config);

// Argmax with lowest-index tie-break, and its probability.
Confidence confidence_of(std::span<const double> probabilities);
Confidence probe_confidence(const ProbeModel& model, std::span<const double> features);

double probe_accuracy(const ProbeModel& model, std::span<const FeatureRow> rows);
double majority_baseline(std::span<const FeatureRow> rows);

// Seeded choice of round(fraction * n) items (at least one when n >= 2).
std::vector<bool> holdout_mask(std::size_t n, double fraction, std::uint64_t seed);

// Deterministic split that holds out `fraction` of the rows (at least one)
// chosen by a seeded shuffle. Returns {kept, held_out}.
std::pair<std::vector<FeatureRow>, std::vector<FeatureRow>> split_holdout(std::span<const FeatureRow> rows,
                                                                         double fraction, std::uint64_t seed);

// `probe/weights` [C,F], `probe/bias` [C], and when standardized
// `probe/feature_mean`, `probe/feature_scale` [F].
std::vector<TensorRecord> probe_records(const ProbeModel& model);
ArchiveMetadata probe_metadata(const ProbeModel& model);
ProbeModel probe_from_archive(const TensorArchive& archive);

}  // namespace semgap
