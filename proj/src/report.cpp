#include "iclprobe/report.hpp"

#include "iclprobe/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace iclprobe {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::optional<double> as_number(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

bool value_less(const std::string& a, const std::string& b) {
    auto na = as_number(a);
    auto nb = as_number(b);
    if (na && nb) return *na < *nb || (*na == *nb && a < b);
    if (na != nb) return na.has_value();  // numbers first
    return a < b;
}

bool row_less(const SummaryRow& a, const SummaryRow& b) {
    if (std::tie(a.dataset, a.model, a.axis) != std::tie(b.dataset, b.model, b.axis)) {
        return std::tie(a.dataset, a.model, a.axis) < std::tie(b.dataset, b.model, b.axis);
    }
    return value_less(a.value, b.value);
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content) || !out.flush()) {
        throw InputError("cannot write " + path.string());
    }
}

json record_to_json(const RunRecord& r) {
    json j = {
        {"eval_index", r.eval_index},
        {"eval_source", r.eval_id.source},
        {"eval_record", r.eval_id.index},
        {"prompt_digest", r.prompt_digest},
        {"expected_label", r.expected_label},
        {"scored_label", r.scored_label},
        {"raw_text", r.prediction.raw_text},
        {"match_kind", to_string(r.prediction.match_kind)},
        {"correct", r.correct},
        {"skipped", r.skipped},
    };
    j["matched_label"] = r.prediction.matched_label_index
                             ? json(*r.prediction.matched_label_index)
                             : json(nullptr);
    if (r.skipped) j["skip_reason"] = r.skip_reason;
    return j;
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    r.eval_index = j.at("eval_index").get<std::size_t>();
    r.eval_id = RecordId{j.at("eval_source").get<std::string>(), j.at("eval_record").get<std::size_t>()};
    r.prompt_digest = j.at("prompt_digest").get<std::string>();
    r.expected_label = j.at("expected_label").get<std::size_t>();
    r.scored_label = j.at("scored_label").get<std::size_t>();
    r.prediction.raw_text = j.at("raw_text").get<std::string>();
    const auto kind = j.at("match_kind").get<std::string>();
    r.prediction.match_kind = kind == "exact"        ? MatchKind::exact
                              : kind == "normalized" ? MatchKind::normalized
                                                     : MatchKind::none;
    if (!j.at("matched_label").is_null()) {
        r.prediction.matched_label_index = j.at("matched_label").get<std::size_t>();
    }
    r.correct = j.at("correct").get<bool>();
    r.skipped = j.at("skipped").get<bool>();
    r.skip_reason = j.value("skip_reason", std::string{});
    return r;
}

}  // namespace

Summary aggregate(std::span<const ResultTable> tables) {
    if (tables.empty()) {
        throw PreconditionError("nothing to aggregate");
    }
    using GroupKey = std::tuple<std::string, std::string, std::string, std::string>;
    struct Acc {
        double accuracy_sum = 0.0;
        std::size_t tables = 0, n = 0, skips = 0;
    };
    std::map<GroupKey, Acc> groups;
    for (const auto& t : tables) {
        auto& g = groups[{t.dataset, t.model, t.axis, t.axis_value}];
        g.accuracy_sum += t.accuracy;
        ++g.tables;
        g.n += t.scored_count();
        g.skips += t.skip_count;
    }

    Summary out;
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<const SummaryRow*>>
        by_setting;
    for (const auto& [key, g] : groups) {
        const auto& [dataset, model, axis, value] = key;
        out.rows.push_back({dataset, model, axis, value,
                            g.accuracy_sum / static_cast<double>(g.tables), g.n, g.skips});
    }
    std::sort(out.rows.begin(), out.rows.end(), row_less);
    for (const auto& row : out.rows) by_setting[{row.model, row.axis, row.value}].push_back(&row);
    for (const auto& [key, rows] : by_setting) {
        const auto& [model, axis, value] = key;
        SummaryRow macro{std::string(kMacroDataset), model, axis, value, 0.0, 0, 0};
        for (const auto* r : rows) {
            macro.accuracy += r->accuracy;
            macro.n += r->n;
            macro.skips += r->skips;
        }
        macro.accuracy /= static_cast<double>(rows.size());
        out.macro_rows.push_back(std::move(macro));
    }
    std::sort(out.macro_rows.begin(), out.macro_rows.end(), row_less);
    return out;
}

ReportFormat parse_report_format(std::string_view s) {
    if (s == "table") return ReportFormat::table;
    if (s == "tsv") return ReportFormat::tsv;
    if (s == "plot" || s == "plot-data") return ReportFormat::plot_data;
    throw InputError("unknown report format '" + std::string(s) + "'");
}

std::string format_report(const Summary& summary, ReportFormat format) {
    std::vector<const SummaryRow*> rows;
    for (const auto& r : summary.rows) rows.push_back(&r);
    for (const auto& r : summary.macro_rows) rows.push_back(&r);
    if (rows.empty()) {
        throw PreconditionError("summary is empty");
    }

    const std::vector<std::string> header = {"dataset", "model",    "axis", "value",
                                             "accuracy", "n", "skips"};
    auto cells = [](const SummaryRow& r) {
        return std::vector<std::string>{r.dataset, r.model, r.axis, r.value, fixed4(r.accuracy),
                                        std::to_string(r.n), std::to_string(r.skips)};
    };
    std::ostringstream out;
    if (format == ReportFormat::table) {
        std::vector<std::size_t> width(header.size());
        for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
        for (const auto* r : rows) {
            auto row = cells(*r);
            for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
        }
        auto line = [&](const std::vector<std::string>& row) {
            std::string text;
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c > 0) text += "  ";
                text += row[c];
                if (c + 1 < row.size()) text.append(width[c] - row[c].size(), ' ');
            }
            out << text << '\n';
        };
        line(header);
        std::vector<std::string> rule;
        for (auto w : width) rule.emplace_back(w, '-');
        line(rule);
        for (const auto* r : rows) line(cells(*r));
        return out.str();
    }

    // Long-form rows: plot-data is comma-separated with quoting, tsv is
    // tab-separated.
    const char delim = format == ReportFormat::tsv ? '\t' : ',';
    auto quote = [&](const std::string& s) {
        if (delim == '\t' || s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    };
    auto line = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out << delim;
            out << quote(row[c]);
        }
        out << '\n';
    };
    line(header);
    for (const auto* r : rows) line(cells(*r));
    return out.str();
}

void emit_report(const Summary& summary, ReportFormat format, const fs::path& path) {
    write_file(path, format_report(summary, format));
}

fs::path write_result_dir(const fs::path& root, const ExperimentConfig& config,
                          const ResultTable& table) {
    const auto dir = root / table.config_digest;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw InputError("cannot create result directory " + dir.string() + ": " + ec.message());
    }
    write_file(dir / "config.json", config.to_json().dump(2) + "\n");

    std::string records;
    for (const auto& r : table.records) records += record_to_json(r).dump() + "\n";
    write_file(dir / "records.jsonl", records);

    json result = {
        {"config_digest", table.config_digest},
        {"dataset", table.dataset},
        {"model", table.model},
        {"axis", table.axis},
        {"value", table.axis_value},
        {"accuracy", table.accuracy},
        {"n", table.scored_count()},
        {"skips", table.skip_count},
    };
    write_file(dir / "result.json", result.dump(2) + "\n");

    const std::vector<ResultTable> one{table};
    const auto summary = aggregate(one);
    write_file(dir / "summary.txt", format_report(summary, ReportFormat::table));
    write_file(dir / "plot_data.csv", format_report(summary, ReportFormat::plot_data));
    return dir;
}

ResultTable load_result_dir(const fs::path& dir) {
    std::ifstream meta_in(dir / "result.json");
    if (!meta_in) {
        throw InputError("no result.json in " + dir.string());
    }
    try {
        const auto meta = json::parse(meta_in);
        ResultTable t;
        t.config_digest = meta.at("config_digest").get<std::string>();
        t.dataset = meta.at("dataset").get<std::string>();
        t.model = meta.at("model").get<std::string>();
        t.axis = meta.at("axis").get<std::string>();
        t.axis_value = meta.at("value").get<std::string>();
        t.accuracy = meta.at("accuracy").get<double>();
        t.skip_count = meta.at("skips").get<std::size_t>();
        std::ifstream rec_in(dir / "records.jsonl");
        std::string line;
        while (std::getline(rec_in, line)) {
            if (!line.empty()) t.records.push_back(record_from_json(json::parse(line)));
        }
        if (t.records.size() < t.skip_count) {
            throw InputError("records.jsonl in " + dir.string() + " is truncated");
        }
        return t;
    } catch (const json::exception& e) {
        throw InputError("malformed result in " + dir.string() + ": " + e.what());
    }
}

std::vector<fs::path> find_result_dirs(const fs::path& root) {
    if (fs::exists(root / "result.json")) return {root};
    std::vector<fs::path> out;
    if (!fs::is_directory(root)) {
        throw InputError("result directory " + root.string() + " does not exist");
    }
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "result.json")) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace iclprobe
