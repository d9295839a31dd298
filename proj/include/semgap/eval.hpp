#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "semgap/query.hpp"
#include "semgap/task.hpp"

namespace semgap {

struct Prediction {
    std::string id;
    std::size_t predicted = 0;
    std::size_t gold = 0;
    double confidence = 1.0;  // in (0, 1]
};

double accuracy(std::span<const Prediction> predictions);

struct PrfScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
};

// Token-level, micro-averaged over PER/LOC/ORG/MISC. Classes are NerTag values.
PrfScores ner_prf(std::span<const Prediction> predictions);

// counts[gold][predicted]
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;
ConfusionMatrix confusion_matrix(std::span<const Prediction> predictions, std::size_t num_classes);

struct CalibrationBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double mean_confidence = 0.0;
    double accuracy = 0.0;
};

struct CalibrationReport {
    std::vector<CalibrationBin> bins;
    double ece = 0.0;
    std::string source;  // "probe" or "query"
    std::string task;
    std::string model_id;
};

inline constexpr std::size_t kDefaultCalibrationBins = 10;

// Equal-width bins [0,1/n), ..., [(n-1)/n, 1]; ECE = sum (count/total) |acc - conf|.
CalibrationReport calibration(std::span<const Prediction> predictions, std::size_t num_bins = kDefaultCalibrationBins);
std::string calibration_csv(const CalibrationReport& report);

struct GroupChoice {
    std::size_t choice = 0;
    double confidence = 0.0;  // chosen positive probability over the group's total
};

// Highest positive probability in a group of 4; lowest index on ties.
GroupChoice choose_in_group(std::span<const double> positive_probabilities);
double analogy_group_accuracy(std::span<const std::vector<double>> groups, std::span<const std::size_t> gold);

struct EvalReport {
    Task task = Task::Wic;
    Method method = Method::Probe;
    std::string model_id;
    std::size_t count = 0;
    double accuracy = 0.0;
    std::optional<PrfScores> ner;
    std::optional<ConfusionMatrix> confusion;
    std::optional<std::string> selected_template;
    std::vector<TemplateScore> per_template;
    CalibrationReport calibration;
};

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

}  // namespace semgap
