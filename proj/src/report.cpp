#include "semgap/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "semgap/error.hpp"

namespace semgap {

namespace {

constexpr std::string_view kMissing = "\u2014";

void set_cell(std::optional<double>& cell, double value, const ResultRow& row, std::string_view what) {
    if (cell) {
        throw InvalidArgument("duplicate result for " + row.model_id + " / " + std::string(to_string(row.method)) +
                              " / " + std::string(what));
    }
    cell = value;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string latex_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '_' || c == '%' || c == '&' || c == '#' || c == '$') out += '\\';
        out += c;
    }
    return out;
}

std::string method_title(Method m) { return m == Method::Query ? "Query" : "Probe"; }

std::vector<std::optional<double>> cells(const ResultRow& r) {
    return {r.wic_accuracy, r.ner_precision, r.ner_recall, r.ner_f1, r.analogy_accuracy};
}

std::string signed_points(double delta) {
    const long rounded = std::lround(delta);
    return rounded > 0 ? "+" + std::to_string(rounded) : std::to_string(rounded);
}

}  // namespace

ResultsMatrix::ResultsMatrix(std::vector<std::string> model_order) : model_order_(std::move(model_order)) {}

ResultRow& ResultsMatrix::row_for(const std::string& model_id, Method method) {
    for (auto& r : rows_) {
        if (r.model_id == model_id && r.method == method) return r;
    }
    ResultRow r;
    r.model_id = model_id;
    r.method = method;
    rows_.push_back(std::move(r));
    return rows_.back();
}

void ResultsMatrix::add(const EvalReport& report) {
    ResultRow& row = row_for(report.model_id, report.method);
    switch (report.task) {
        case Task::Wic:
            set_cell(row.wic_accuracy, report.accuracy, row, "wic");
            break;
        case Task::Ner:
            if (!report.ner) throw InvalidArgument("NER report for " + report.model_id + " lacks precision/recall");
            set_cell(row.ner_precision, report.ner->precision, row, "ner");
            row.ner_recall = report.ner->recall;
            row.ner_f1 = report.ner->f1;
            break;
        case Task::Analogy:
            set_cell(row.analogy_accuracy, report.accuracy, row, "analogy");
            break;
    }
}

void ResultsMatrix::add(ResultRow row) {
    ResultRow& target = row_for(row.model_id, row.method);
    auto merge = [&](std::optional<double>& dst, const std::optional<double>& src, std::string_view what) {
        if (src) set_cell(dst, *src, target, what);
    };
    merge(target.wic_accuracy, row.wic_accuracy, "wic");
    merge(target.ner_precision, row.ner_precision, "ner precision");
    merge(target.ner_recall, row.ner_recall, "ner recall");
    merge(target.ner_f1, row.ner_f1, "ner f1");
    merge(target.analogy_accuracy, row.analogy_accuracy, "analogy");
}

std::vector<ResultRow> ResultsMatrix::rows() const {
    auto rank = [&](const std::string& model) {
        const auto it = std::find(model_order_.begin(), model_order_.end(), model);
        return static_cast<std::size_t>(it - model_order_.begin());
    };
    std::vector<ResultRow> out = rows_;
    std::stable_sort(out.begin(), out.end(), [&](const ResultRow& a, const ResultRow& b) {
        const auto ra = rank(a.model_id), rb = rank(b.model_id);
        if (ra != rb) return ra < rb;
        if (a.model_id != b.model_id) return a.model_id < b.model_id;
        return a.method == Method::Query && b.method == Method::Probe;
    });
    return out;
}

TableFormat parse_table_format(std::string_view name) {
    if (name == "markdown" || name == "md") return TableFormat::Markdown;
    if (name == "csv") return TableFormat::Csv;
    if (name == "latex" || name == "tex") return TableFormat::Latex;
    throw InvalidArgument("unknown table format '" + std::string(name) + "'");
}

std::string format_percent(std::optional<double> value) {
    if (!value) return std::string(kMissing);
    return std::to_string(std::lround(*value * 100.0));
}

std::string render_table(const ResultsMatrix& matrix, TableFormat format) {
    if (matrix.empty()) throw InvalidArgument("render_table: empty results matrix");
    const auto rows = matrix.rows();
    std::ostringstream out;

    switch (format) {
        case TableFormat::Markdown: {
            out << "| Model | Method | WiC Acc(%) | NER Precision | NER Recall | NER F1 | Analogy Acc(%) |\n";
            out << "|---|---|---|---|---|---|---|\n";
            for (const auto& r : rows) {
                out << "| " << r.model_id << " | " << method_title(r.method);
                for (const auto& c : cells(r)) out << " | " << format_percent(c);
                out << " |\n";
            }
            break;
        }
        case TableFormat::Csv: {
            out << "model,method,wic_acc,ner_precision,ner_recall,ner_f1,analogy_acc\n";
            for (const auto& r : rows) {
                out << csv_field(r.model_id) << ',' << method_title(r.method);
                for (const auto& c : cells(r)) out << ',' << format_percent(c);
                out << '\n';
            }
            break;
        }
        case TableFormat::Latex: {
            out << "\\begin{tabular}{cc|c|ccc|c}\n\\hline\n";
            out << "\\multirow{2}{*}{Model} & \\multirow{2}{*}{method} & WiC & \\multicolumn{3}{c|}{NER} & Analogy \\\\ "
                   "\\cline{3-7}\n";
            out << " & & Acc(\\%) & Precision & Recall & F1 & Acc(\\%) \\\\ \\hline\n";
            for (std::size_t i = 0; i < rows.size();) {
                std::size_t j = i;
                while (j < rows.size() && rows[j].model_id == rows[i].model_id) ++j;
                for (std::size_t k = i; k < j; ++k) {
                    if (k == i) {
                        out << "\\multirow{" << (j - i) << "}{*}{" << latex_escape(rows[k].model_id) << "}";
                    }
                    out << " & " << method_title(rows[k].method);
                    for (const auto& c : cells(rows[k])) out << " & " << (c ? format_percent(c) : "---");
                    out << " \\\\" << (k + 1 == j ? " \\hline" : "") << '\n';
                }
                i = j;
            }
            out << "\\end{tabular}\n";
            break;
        }
    }
    return out.str();
}

std::vector<GapEntry> compute_gaps(const ResultsMatrix& matrix) {
    const auto rows = matrix.rows();
    std::vector<GapEntry> gaps;
    for (const auto& q : rows) {
        if (q.method != Method::Query) continue;
        const auto p = std::find_if(rows.begin(), rows.end(), [&](const ResultRow& r) {
            return r.model_id == q.model_id && r.method == Method::Probe;
        });
        if (p == rows.end()) continue;
        const std::pair<Task, std::pair<std::optional<double>, std::optional<double>>> per_task[] = {
            {Task::Wic, {q.wic_accuracy, p->wic_accuracy}},
            {Task::Ner, {q.ner_f1, p->ner_f1}},
            {Task::Analogy, {q.analogy_accuracy, p->analogy_accuracy}},
        };
        for (const auto& [task, values] : per_task) {
            if (!values.first || !values.second) continue;
            GapEntry g;
            g.model_id = q.model_id;
            g.task = task;
            g.query = *values.first;
            g.probe = *values.second;
            g.delta_points = (g.probe - g.query) * 100.0;
            g.flagged = g.probe > g.query;
            gaps.push_back(g);
        }
    }
    return gaps;
}

std::string render_gap_summary(const ResultsMatrix& matrix) {
    const auto gaps = compute_gaps(matrix);
    if (gaps.empty()) {
        throw InvalidArgument("render_gap_summary: no model has both query and probe results for the same task");
    }
    std::ostringstream out;
    out << "| Model | Task | Metric | Query | Probe | Delta (points) | Probe > Query |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& g : gaps) {
        out << "| " << g.model_id << " | " << to_string(g.task) << " | " << (g.task == Task::Ner ? "F1" : "Acc")
            << " | " << format_percent(g.query) << " | " << format_percent(g.probe) << " | "
            << signed_points(g.delta_points) << " | " << (g.flagged ? "yes" : "no") << " |\n";
    }
    return out.str();
}

}  // namespace semgap
