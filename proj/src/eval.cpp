#include "semgap/eval.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "semgap/corpus.hpp"
#include "semgap/error.hpp"

namespace semgap {

namespace {

// Neumaier-compensated running sum; keeps bin means independent of order.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

constexpr std::size_t kO = static_cast<std::size_t>(NerTag::O);

std::size_t bin_index(double confidence, std::size_t n) {
    auto b = static_cast<std::size_t>(std::floor(confidence * static_cast<double>(n)));
    if (b >= n) b = n - 1;
    // Guard the edges against rounding in confidence * n.
    if (b + 1 < n && confidence >= static_cast<double>(b + 1) / static_cast<double>(n)) ++b;
    if (b > 0 && confidence < static_cast<double>(b) / static_cast<double>(n)) --b;
    return b;
}

nlohmann::ordered_json to_json(const CalibrationReport& c) {
    nlohmann::ordered_json j;
    j["source"] = c.source;
    j["task"] = c.task;
    j["model_id"] = c.model_id;
    j["ece"] = c.ece;
    auto bins = nlohmann::ordered_json::array();
    for (const auto& b : c.bins) {
        bins.push_back({{"lower", b.lower},
                        {"upper", b.upper},
                        {"count", b.count},
                        {"mean_confidence", b.mean_confidence},
                        {"accuracy", b.accuracy}});
    }
    j["bins"] = std::move(bins);
    return j;
}

CalibrationReport calibration_from_json(const nlohmann::json& j) {
    CalibrationReport c;
    c.source = j.at("source").get<std::string>();
    c.task = j.at("task").get<std::string>();
    c.model_id = j.at("model_id").get<std::string>();
    c.ece = j.at("ece").get<double>();
    for (const auto& b : j.at("bins")) {
        c.bins.push_back({b.at("lower").get<double>(), b.at("upper").get<double>(), b.at("count").get<std::size_t>(),
                          b.at("mean_confidence").get<double>(), b.at("accuracy").get<double>()});
    }
    return c;
}

}  // namespace

double accuracy(std::span<const Prediction> predictions) {
    if (predictions.empty()) throw InvalidArgument("accuracy: no predictions");
    std::size_t correct = 0;
    for (const auto& p : predictions) correct += p.predicted == p.gold;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

PrfScores ner_prf(std::span<const Prediction> predictions) {
    if (predictions.empty()) throw InvalidArgument("ner_prf: no predictions");
    PrfScores s;
    for (const auto& p : predictions) {
        if (p.gold > kO || p.predicted > kO) throw InvalidArgument("ner_prf: class index outside the NER label set");
        const bool gold_entity = p.gold != kO;
        const bool pred_entity = p.predicted != kO;
        if (gold_entity && pred_entity && p.gold == p.predicted) {
            ++s.true_positives;
            continue;
        }
        if (pred_entity) ++s.false_positives;
        if (gold_entity) ++s.false_negatives;
    }
    const auto tp = static_cast<double>(s.true_positives);
    const auto predicted = tp + static_cast<double>(s.false_positives);
    const auto gold = tp + static_cast<double>(s.false_negatives);
    s.precision = predicted > 0 ? tp / predicted : 0.0;
    s.recall = gold > 0 ? tp / gold : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

ConfusionMatrix confusion_matrix(std::span<const Prediction> predictions, std::size_t num_classes) {
    ConfusionMatrix m(num_classes, std::vector<std::size_t>(num_classes, 0));
    for (const auto& p : predictions) {
        if (p.gold >= num_classes || p.predicted >= num_classes) {
            throw InvalidArgument("confusion_matrix: class index out of range");
        }
        ++m[p.gold][p.predicted];
    }
    return m;
}

CalibrationReport calibration(std::span<const Prediction> predictions, std::size_t num_bins) {
    if (predictions.empty()) throw InvalidArgument("calibration: no predictions");
    if (num_bins == 0) throw InvalidArgument("calibration: need at least one bin");

    std::vector<CompensatedSum> conf_sums(num_bins);
    std::vector<std::size_t> counts(num_bins, 0), correct(num_bins, 0);
    for (const auto& p : predictions) {
        if (!(p.confidence > 0.0 && p.confidence <= 1.0)) {
            throw InvalidArgument("calibration: confidence " + std::to_string(p.confidence) + " outside (0,1]");
        }
        const std::size_t b = bin_index(p.confidence, num_bins);
        conf_sums[b].add(p.confidence);
        ++counts[b];
        correct[b] += p.predicted == p.gold;
    }

    CalibrationReport report;
    const auto total = static_cast<double>(predictions.size());
    CompensatedSum ece;
    for (std::size_t b = 0; b < num_bins; ++b) {
        CalibrationBin bin;
        bin.lower = static_cast<double>(b) / static_cast<double>(num_bins);
        bin.upper = static_cast<double>(b + 1) / static_cast<double>(num_bins);
        bin.count = counts[b];
        if (bin.count > 0) {
            const auto n = static_cast<double>(bin.count);
            bin.mean_confidence = conf_sums[b].value() / n;
            bin.accuracy = static_cast<double>(correct[b]) / n;
            ece.add(n / total * std::abs(bin.accuracy - bin.mean_confidence));
        }
        report.bins.push_back(bin);
    }
    report.ece = ece.value();
    return report;
}

std::string calibration_csv(const CalibrationReport& report) {
    std::ostringstream out;
    out << "bin_lower,bin_upper,count,mean_confidence,accuracy\n";
    out << std::setprecision(17);
    for (const auto& b : report.bins) {
        out << b.lower << ',' << b.upper << ',' << b.count << ',' << b.mean_confidence << ',' << b.accuracy << '\n';
    }
    return out.str();
}

GroupChoice choose_in_group(std::span<const double> positive_probabilities) {
    if (positive_probabilities.size() != 4) {
        throw InvalidArgument("analogy group must have exactly 4 rows, got " +
                              std::to_string(positive_probabilities.size()));
    }
    GroupChoice g;
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        total += positive_probabilities[k];
        if (positive_probabilities[k] > positive_probabilities[g.choice]) g.choice = k;
    }
    g.confidence = total > 0.0 ? positive_probabilities[g.choice] / total : 0.25;
    return g;
}

double analogy_group_accuracy(std::span<const std::vector<double>> groups, std::span<const std::size_t> gold) {
    if (groups.empty()) throw InvalidArgument("analogy_group_accuracy: no groups");
    if (groups.size() != gold.size()) throw InvalidArgument("analogy_group_accuracy: gold count != group count");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) correct += choose_in_group(groups[i]).choice == gold[i];
    return static_cast<double>(correct) / static_cast<double>(groups.size());
}

nlohmann::ordered_json to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["task"] = std::string(to_string(report.task));
    j["method"] = std::string(to_string(report.method));
    j["model_id"] = report.model_id;
    j["count"] = report.count;
    j["accuracy"] = report.accuracy;
    if (report.ner) {
        j["precision"] = report.ner->precision;
        j["recall"] = report.ner->recall;
        j["f1"] = report.ner->f1;
        j["true_positives"] = report.ner->true_positives;
        j["false_positives"] = report.ner->false_positives;
        j["false_negatives"] = report.ner->false_negatives;
    }
    if (report.confusion) j["confusion"] = *report.confusion;
    if (report.selected_template) j["selected_template"] = *report.selected_template;
    if (!report.per_template.empty()) {
        auto per = nlohmann::ordered_json::array();
        for (const auto& t : report.per_template) per.push_back({{"template", t.template_id}, {"score", t.accuracy}});
        j["per_template"] = std::move(per);
    }
    j["calibration"] = to_json(report.calibration);
    return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    try {
        EvalReport r;
        r.task = parse_task(j.at("task").get<std::string>());
        r.method = parse_method(j.at("method").get<std::string>());
        r.model_id = j.at("model_id").get<std::string>();
        r.count = j.at("count").get<std::size_t>();
        r.accuracy = j.at("accuracy").get<double>();
        if (j.contains("precision")) {
            PrfScores s;
            s.precision = j.at("precision").get<double>();
            s.recall = j.at("recall").get<double>();
            s.f1 = j.at("f1").get<double>();
            s.true_positives = j.value("true_positives", std::size_t{0});
            s.false_positives = j.value("false_positives", std::size_t{0});
            s.false_negatives = j.value("false_negatives", std::size_t{0});
            r.ner = s;
        }
        if (j.contains("confusion")) r.confusion = j.at("confusion").get<ConfusionMatrix>();
        if (j.contains("selected_template")) r.selected_template = j.at("selected_template").get<std::string>();
        if (j.contains("per_template")) {
            for (const auto& t : j.at("per_template")) {
                r.per_template.push_back({t.at("template").get<std::string>(), t.at("score").get<double>()});
            }
        }
        if (j.contains("calibration")) r.calibration = calibration_from_json(j.at("calibration"));
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("eval report: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("eval report: ") + e.what());
    }
}

}  // namespace semgap
