#pragma once

#include "iclprobe/experiment.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace iclprobe {

/// `n` counts scored (non-skipped) records; `skips` the skipped ones.
struct SummaryRow {
    std::string dataset;
    std::string model;
    std::string axis;
    std::string value;
    double accuracy = 0.0;
    std::size_t n = 0;
    std::size_t skips = 0;

    bool operator==(const SummaryRow&) const = default;
};

inline constexpr std::string_view kMacroDataset = "macro-average";

struct Summary {
    std::vector<SummaryRow> rows;        // one per (dataset, model, axis, value)
    std::vector<SummaryRow> macro_rows;  // unweighted mean over datasets
};

/// Groups tables by (dataset, model, axis, value); repeated tables in a
/// group are averaged. Macro rows average the per-dataset accuracies of
/// each (model, axis, value) with equal weight. Rows are sorted, numeric
/// axis values numerically, so the output does not depend on input order.
Summary aggregate(std::span<const ResultTable> tables);

enum class ReportFormat { table, tsv, plot_data };

ReportFormat parse_report_format(std::string_view text);
std::string format_report(const Summary& summary, ReportFormat format);
void emit_report(const Summary& summary, ReportFormat format, const std::filesystem::path& path);

/// Result directory layout: `<root>/<config digest>/` holding
/// config.json, records.jsonl, result.json, summary.txt and plot_data.csv.
std::filesystem::path write_result_dir(const std::filesystem::path& root,
                                       const ExperimentConfig& config, const ResultTable& table);
ResultTable load_result_dir(const std::filesystem::path& dir);

/// Every result directory directly below `root`, in name order.
std::vector<std::filesystem::path> find_result_dirs(const std::filesystem::path& root);

}  // namespace iclprobe
