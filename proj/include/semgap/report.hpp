#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semgap/eval.hpp"
#include "semgap/task.hpp"

namespace semgap {

// One (model, method) line of the results table. Values are fractions in [0,1].
struct ResultRow {
    std::string model_id;
    Method method = Method::Query;
    std::optional<double> wic_accuracy;
    std::optional<double> ner_precision;
    std::optional<double> ner_recall;
    std::optional<double> ner_f1;
    std::optional<double> analogy_accuracy;
};

class ResultsMatrix {
public:
    // Rows follow `model_order`; unlisted models come after, by name. Query
    // precedes Probe within a model.
    explicit ResultsMatrix(std::vector<std::string> model_order = {});

    // Throws InvalidArgument if the (model, method, task) cell is already set.
    void add(const EvalReport& report);
    void add(ResultRow row);

    std::vector<ResultRow> rows() const;
    bool empty() const noexcept { return rows_.empty(); }

private:
    ResultRow& row_for(const std::string& model_id, Method method);

    std::vector<std::string> model_order_;
    std::vector<ResultRow> rows_;
};

enum class TableFormat { Markdown, Csv, Latex };
TableFormat parse_table_format(std::string_view name);

// Integer-percent display; absent cells render as an em dash.
std::string format_percent(std::optional<double> value);

std::string render_table(const ResultsMatrix& matrix, TableFormat format);

struct GapEntry {
    std::string model_id;
    Task task = Task::Wic;
    double query = 0.0;
    double probe = 0.0;
    double delta_points = 0.0;  // (probe - query) * 100
    bool flagged = false;       // probe > query
};

// WiC accuracy, NER F1 and analogy accuracy for every model with both methods.
std::vector<GapEntry> compute_gaps(const ResultsMatrix& matrix);
std::string render_gap_summary(const ResultsMatrix& matrix);

}  // namespace semgap
