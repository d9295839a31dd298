#include "semgap/probe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "semgap/error.hpp"

namespace semgap {

namespace {

double round_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// Rows already passed through the standardizer, packed row-major.
struct Design {
    std::size_t rows = 0;
    std::size_t dim = 0;
    Vector x;
    std::vector<std::size_t> y;
};

Design make_design(std::span<const FeatureRow> rows, const Standardizer& standardizer, std::size_t dim) {
    Design d;
    d.rows = rows.size();
    d.dim = dim;
    d.x.reserve(rows.size() * dim);
    d.y.reserve(rows.size());
    for (const auto& r : rows) {
        if (standardizer.empty()) {
            d.x.insert(d.x.end(), r.features.begin(), r.features.end());
        } else {
            const auto z = standardizer.apply(r.features);
            d.x.insert(d.x.end(), z.begin(), z.end());
        }
        d.y.push_back(r.label);
    }
    return d;
}

struct Pass {
    double loss = 0.0;       // mean NLL + L2 term
    double mean_nll = 0.0;
    std::size_t correct = 0;
    Vector gradient;
};

// One full pass over the design. Standardizer is not applied here.
Pass full_pass(const ProbeModel& m, const Design& d, double l2_lambda, bool want_gradient) {
    const std::size_t C = m.num_classes;
    const std::size_t F = m.feature_dim;
    Pass out;
    if (want_gradient) out.gradient.assign(m.parameter_count(), 0.0);

    Vector z(C);
    double nll = 0.0;
    for (std::size_t i = 0; i < d.rows; ++i) {
        const double* x = d.x.data() + i * F;
        const std::size_t y = d.y[i];
        std::size_t best = 0;
        for (std::size_t c = 0; c < C; ++c) {
            const double* w = m.weights.data() + c * F;
            double s = m.bias[c];
            for (std::size_t f = 0; f < F; ++f) s += w[f] * x[f];
            z[c] = s;
            if (s > z[best]) best = c;
        }
        if (best == y) ++out.correct;
        const double zmax = z[best];
        double sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) sum += std::exp(z[c] - zmax);
        const double lse = zmax + std::log(sum);
        nll += lse - z[y];
        if (want_gradient) {
            for (std::size_t c = 0; c < C; ++c) {
                const double coef = std::exp(z[c] - lse) - (c == y ? 1.0 : 0.0);
                double* g = out.gradient.data() + c * F;
                for (std::size_t f = 0; f < F; ++f) g[f] += coef * x[f];
                out.gradient[C * F + c] += coef;
            }
        }
    }
    const double n = static_cast<double>(d.rows);
    out.mean_nll = nll / n;
    double w2 = 0.0;
    for (double w : m.weights) w2 += w * w;
    out.loss = out.mean_nll + 0.5 * l2_lambda * w2;
    if (want_gradient) {
        for (auto& g : out.gradient) g /= n;
        for (std::size_t k = 0; k < C * F; ++k) out.gradient[k] += l2_lambda * m.weights[k];
    }
    return out;
}

void check_rows(std::span<const FeatureRow> rows, std::size_t dim, std::size_t classes, const char* what) {
    for (const auto& r : rows) {
        if (r.features.size() != dim) {
            throw InvalidArgument(std::string(what) + ": feature dimension " + std::to_string(r.features.size()) +
                                  " != " + std::to_string(dim));
        }
        if (r.label >= classes) {
            throw InvalidArgument(std::string(what) + ": label " + std::to_string(r.label) +
                                  " out of range for " + std::to_string(classes) + " classes");
        }
        for (double v : r.features) {
            if (!std::isfinite(v)) throw DataError(std::string(what) + ": non-finite feature value");
        }
    }
}

}  // namespace

Standardizer Standardizer::fit(std::span<const FeatureRow> rows) {
    Standardizer s;
    if (rows.empty()) return s;
    const std::size_t dim = rows.front().features.size();
    const double n = static_cast<double>(rows.size());
    s.mean.assign(dim, 0.0);
    s.scale.assign(dim, 0.0);
    for (const auto& r : rows) {
        for (std::size_t f = 0; f < dim; ++f) s.mean[f] += r.features[f];
    }
    for (auto& m : s.mean) m /= n;
    for (const auto& r : rows) {
        for (std::size_t f = 0; f < dim; ++f) {
            const double dev = r.features[f] - s.mean[f];
            s.scale[f] += dev * dev;
        }
    }
    for (auto& v : s.scale) {
        v = std::sqrt(v / n);
        if (!(v > 1e-12)) v = 1.0;  // constant column
    }
    return s;
}

Vector Standardizer::apply(std::span<const double> x) const {
    if (empty()) return Vector(x.begin(), x.end());
    if (x.size() != mean.size()) throw InvalidArgument("standardizer: dimension mismatch");
    Vector out(x.size());
    for (std::size_t f = 0; f < x.size(); ++f) out[f] = (x[f] - mean[f]) / scale[f];
    return out;
}

ProbeModel ProbeModel::zeros(std::vector<std::string> class_labels, std::size_t feature_dim) {
    ProbeModel m;
    m.num_classes = class_labels.size();
    m.feature_dim = feature_dim;
    m.weights.assign(m.num_classes * feature_dim, 0.0);
    m.bias.assign(m.num_classes, 0.0);
    m.class_labels = std::move(class_labels);
    return m;
}

Vector ProbeModel::parameters() const {
    Vector flat(weights);
    flat.insert(flat.end(), bias.begin(), bias.end());
    return flat;
}

void ProbeModel::set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw InvalidArgument("set_parameters: wrong parameter count");
    std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(weights.size()), weights.begin());
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(weights.size()), flat.end(), bias.begin());
}

void ProbeModel::validate() const {
    if (num_classes < 2) throw DataError("probe needs at least 2 classes");
    if (class_labels.size() != num_classes) throw DataError("probe class label count != class count");
    if (weights.size() != num_classes * feature_dim || bias.size() != num_classes) {
        throw DataError("probe parameter sizes do not match C x F");
    }
    if (!standardizer.empty() &&
        (standardizer.mean.size() != feature_dim || standardizer.scale.size() != feature_dim)) {
        throw DataError("probe standardizer dimension != feature dimension");
    }
    auto finite = [](const Vector& v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); };
    if (!finite(weights) || !finite(bias) || !finite(standardizer.mean) || !finite(standardizer.scale)) {
        throw DataError("probe parameters must be finite");
    }
}

Vector logits(const ProbeModel& model, std::span<const double> features) {
    if (features.size() != model.feature_dim) {
        throw InvalidArgument("probe expects " + std::to_string(model.feature_dim) + " features, got " +
                              std::to_string(features.size()));
    }
    const Vector x = model.standardizer.apply(features);
    Vector z(model.num_classes);
    for (std::size_t c = 0; c < model.num_classes; ++c) {
        double s = model.bias[c];
        for (std::size_t f = 0; f < model.feature_dim; ++f) s += model.weight(c, f) * x[f];
        z[c] = s;
    }
    return z;
}

Vector predict_proba(const ProbeModel& model, std::span<const double> features) {
    for (double v : features) {
        if (!std::isfinite(v)) throw InvalidArgument("predict_proba: non-finite feature");
    }
    Vector z = logits(model, features);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    // Saturated logits would round to exactly 0 or 1; keep the open interval.
    const double lo = std::numeric_limits<double>::denorm_min(), hi = std::nextafter(1.0, 0.0);
    for (auto& v : z) v = std::clamp(v / sum, lo, hi);
    return z;
}

LossAndGradient cross_entropy_loss(const ProbeModel& model, std::span<const FeatureRow> rows, double l2_lambda) {
    if (rows.empty()) throw InvalidArgument("cross_entropy_loss: no rows");
    check_rows(rows, model.feature_dim, model.num_classes, "cross_entropy_loss");
    const Design d = make_design(rows, model.standardizer, model.feature_dim);
    auto pass = full_pass(model, d, l2_lambda, true);
    return {pass.loss, std::move(pass.gradient)};
}

TrainOutcome train_probe_traced(std::span<const FeatureRow> train_rows, std::span<const FeatureRow> dev_rows,
                                const TrainConfig& config) {
    if (train_rows.empty()) throw InvalidArgument("train_probe: empty training set");
    if (!(config.learning_rate > 0.0) || config.max_epochs == 0 || config.l2_lambda < 0.0) {
        throw InvalidArgument("train_probe: invalid training configuration");
    }
    const std::size_t dim = train_rows.front().features.size();
    std::size_t classes = config.class_labels.size();
    std::set<std::size_t> train_labels;
    for (const auto& r : train_rows) {
        train_labels.insert(r.label);
        classes = std::max(classes, r.label + 1);
    }
    for (const auto& r : dev_rows) classes = std::max(classes, r.label + 1);
    if (!config.class_labels.empty() && classes > config.class_labels.size()) {
        throw InvalidArgument("train_probe: label exceeds configured class list");
    }
    if (train_labels.size() < 2) throw InvalidArgument("train_probe: training set has a single class");
    check_rows(train_rows, dim, classes, "train_probe (train)");
    check_rows(dev_rows, dim, classes, "train_probe (dev)");

    std::vector<std::string> labels = config.class_labels;
    if (labels.empty()) {
        for (std::size_t c = 0; c < classes; ++c) labels.push_back(std::to_string(c));
    }

    Standardizer standardizer;
    if (config.standardize) {
        standardizer = Standardizer::fit(train_rows);
        for (auto& v : standardizer.mean) v = round_f32(v);
        for (auto& v : standardizer.scale) v = round_f32(v);
    }
    const Design train = make_design(train_rows, standardizer, dim);
    const Design dev = dev_rows.empty() ? Design{} : make_design(dev_rows, standardizer, dim);
    const Design& monitor = dev_rows.empty() ? train : dev;

    ProbeModel model = ProbeModel::zeros(labels, dim);
    TrainOutcome outcome;
    TrainTrace& trace = outcome.trace;

    Pass current = full_pass(model, train, config.l2_lambda, true);
    trace.train_loss.push_back(current.loss);

    ProbeModel best = model;
    std::size_t best_correct = 0;
    double best_nll = 0.0;
    std::size_t stale = 0;
    auto observe = [&](std::size_t epoch) {
        const Pass m = full_pass(model, monitor, 0.0, false);
        trace.monitor_accuracy.push_back(static_cast<double>(m.correct) / static_cast<double>(monitor.rows));
        if (epoch == 0 || m.correct > best_correct || (m.correct == best_correct && m.mean_nll < best_nll)) {
            best = model;
            best_correct = m.correct;
            best_nll = m.mean_nll;
            trace.best_epoch = epoch;
            stale = 0;
        } else {
            ++stale;
        }
    };
    observe(0);

    double lr = config.learning_rate;
    trace.stop_reason = "max_epochs";
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const Vector params = model.parameters();
        Vector trial(params.size());
        ProbeModel candidate = model;
        Pass next;
        bool accepted = false;
        for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
            for (std::size_t k = 0; k < params.size(); ++k) trial[k] = params[k] - lr * current.gradient[k];
            candidate.set_parameters(trial);
            next = full_pass(candidate, train, config.l2_lambda, true);
            if (next.loss <= current.loss) {
                accepted = true;
            } else {
                lr *= 0.5;
            }
        }
        if (!accepted) {
            trace.stop_reason = "step_rejected";
            break;
        }
        const double improvement = current.loss - next.loss;
        model = std::move(candidate);
        current = std::move(next);
        trace.train_loss.push_back(current.loss);
        trace.epochs = epoch;

        observe(epoch);
        if (stale >= config.early_stop_patience) {
            trace.stop_reason = "early_stop";
            break;
        }
        if (improvement < config.tolerance) {
            trace.stop_reason = "converged";
            break;
        }
    }

    best.standardizer = std::move(standardizer);
    for (auto& w : best.weights) w = round_f32(w);
    for (auto& b : best.bias) b = round_f32(b);
    best.trained_on = config.metadata;
    best.trained_on["learning_rate"] = format_double(config.learning_rate);
    best.trained_on["max_epochs"] = std::to_string(config.max_epochs);
    best.trained_on["l2_lambda"] = format_double(config.l2_lambda);
    best.trained_on["seed"] = std::to_string(config.seed);
    best.trained_on["early_stop_patience"] = std::to_string(config.early_stop_patience);
    best.trained_on["tolerance"] = format_double(config.tolerance);
    best.trained_on["standardize"] = config.standardize ? "true" : "false";
    best.trained_on["epochs_run"] = std::to_string(trace.epochs);
    best.trained_on["best_epoch"] = std::to_string(trace.best_epoch);
    best.trained_on["stop_reason"] = trace.stop_reason;
    best.trained_on["train_rows"] = std::to_string(train_rows.size());
    outcome.model = std::move(best);
    return outcome;
}

ProbeModel train_probe(std::span<const FeatureRow> train_rows, std::span<const FeatureRow> dev_rows,
                       const TrainConfig& config) {
    return train_probe_traced(train_rows, dev_rows, config).model;
}

Confidence confidence_of(std::span<const double> probabilities) {
    if (probabilities.empty()) throw InvalidArgument("confidence_of: empty distribution");
    Confidence c;
    for (std::size_t k = 1; k < probabilities.size(); ++k) {
        if (probabilities[k] > probabilities[c.predicted_class]) c.predicted_class = k;
    }
    c.confidence = probabilities[c.predicted_class];
    return c;
}

Confidence probe_confidence(const ProbeModel& model, std::span<const double> features) {
    const Vector p = predict_proba(model, features);
    return confidence_of(p);
}

double probe_accuracy(const ProbeModel& model, std::span<const FeatureRow> rows) {
    if (rows.empty()) throw InvalidArgument("probe_accuracy: no rows");
    std::size_t correct = 0;
    for (const auto& r : rows) {
        if (probe_confidence(model, r.features).predicted_class == r.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double majority_baseline(std::span<const FeatureRow> rows) {
    if (rows.empty()) throw InvalidArgument("majority_baseline: no rows");
    std::map<std::size_t, std::size_t> counts;
    for (const auto& r : rows) ++counts[r.label];
    std::size_t most = 0;
    for (const auto& [label, n] : counts) most = std::max(most, n);
    return static_cast<double>(most) / static_cast<double>(rows.size());
}

std::vector<bool> holdout_mask(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("holdout: fraction must be in (0,1)");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t held =
        n < 2 ? 0 : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
    std::vector<bool> mask(n, false);
    for (std::size_t k = 0; k < held; ++k) mask[order[k]] = true;
    return mask;
}

std::pair<std::vector<FeatureRow>, std::vector<FeatureRow>> split_holdout(std::span<const FeatureRow> rows,
                                                                         double fraction, std::uint64_t seed) {
    const auto mask = holdout_mask(rows.size(), fraction, seed);
    std::pair<std::vector<FeatureRow>, std::vector<FeatureRow>> out;
    for (std::size_t i = 0; i < rows.size(); ++i) (mask[i] ? out.second : out.first).push_back(rows[i]);
    return out;
}

std::vector<TensorRecord> probe_records(const ProbeModel& model) {
    model.validate();
    auto to_floats = [](const Vector& v) { return std::vector<float>(v.begin(), v.end()); };
    std::vector<TensorRecord> records{
        {"probe/weights", {model.num_classes, model.feature_dim}, to_floats(model.weights)},
        {"probe/bias", {model.num_classes}, to_floats(model.bias)},
    };
    if (!model.standardizer.empty()) {
        records.push_back({"probe/feature_mean", {model.feature_dim}, to_floats(model.standardizer.mean)});
        records.push_back({"probe/feature_scale", {model.feature_dim}, to_floats(model.standardizer.scale)});
    }
    return records;
}

ArchiveMetadata probe_metadata(const ProbeModel& model) {
    auto get = [&](const char* key, std::string fallback) {
        const auto it = model.trained_on.find(key);
        return it == model.trained_on.end() ? fallback : it->second;
    };
    ArchiveMetadata md;
    md["model_id"] = get("model_id", "unknown");
    md["task"] = get("task", "unknown");
    md["hidden_size"] = get("hidden_size", std::to_string(model.feature_dim));
    md["format_version"] = std::to_string(kArchiveVersion);
    md["kind"] = "probe";
    md["class_labels"] = nlohmann::json(model.class_labels).dump();
    for (const auto& [k, v] : model.trained_on) md["trained_on." + k] = v;
    return md;
}

ProbeModel probe_from_archive(const TensorArchive& archive) {
    const auto& md = archive.metadata();
    const auto labels_it = md.find("class_labels");
    if (labels_it == md.end()) throw DataError("probe archive has no class_labels metadata");

    ProbeModel m;
    try {
        m.class_labels = nlohmann::json::parse(labels_it->second).get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("probe archive: bad class_labels: ") + e.what());
    }
    const auto& w = archive.at("probe/weights");
    const auto& b = archive.at("probe/bias");
    if (w.shape.size() != 2 || b.shape.size() != 1 || b.shape[0] != w.shape[0]) {
        throw DataError("probe archive: inconsistent weight/bias shapes");
    }
    m.num_classes = w.shape[0];
    m.feature_dim = w.shape[1];
    m.weights.assign(w.data.begin(), w.data.end());
    m.bias.assign(b.data.begin(), b.data.end());
    if (const auto* mean = archive.find("probe/feature_mean")) {
        const auto& scale = archive.at("probe/feature_scale");
        m.standardizer.mean.assign(mean->data.begin(), mean->data.end());
        m.standardizer.scale.assign(scale.data.begin(), scale.data.end());
    }
    constexpr std::string_view prefix = "trained_on.";
    for (const auto& [k, v] : md) {
        if (k.starts_with(prefix)) m.trained_on[k.substr(prefix.size())] = v;
    }
    m.validate();
    return m;
}

}  // namespace semgap
