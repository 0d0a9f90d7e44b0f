#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "repcx/error.hpp"
#include "repcx/profiler.hpp"

namespace repcx {
namespace {

using nlohmann::json;

constexpr std::string_view kCsvHeader =
    "epoch,boundary_index,boundary_name,side,split,n_points,subset_count,complexity,dropped_tail";
constexpr std::string_view kEndToEnd = "END2END";

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// END2END rows sit one past the last boundary of their (epoch, split).
std::size_t end_to_end_index(const ProfileReport& r, int epoch, const std::string& split) {
    std::size_t idx = 0;
    for (const auto& c : r.cells)
        if (c.epoch == epoch && c.split == split) idx = std::max(idx, c.boundary.index + 1);
    return idx;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

json cell_json(const BoundaryCell& c) {
    return {{"epoch", c.epoch},
            {"split", c.split},
            {"boundary_index", c.boundary.index},
            {"boundary_name", c.boundary.layer_name},
            {"side", side_name(c.boundary.side)},
            {"complexity", c.estimate.value},
            {"n_points", c.estimate.n_points},
            {"subset_count", c.estimate.subset_count},
            {"subset_size", c.estimate.subset_size},
            {"per_subset", c.estimate.per_subset},
            {"dropped_tail", c.estimate.dropped_tail}};
}

}  // namespace

std::string report_to_csv(const ProfileReport& r) {
    std::string out(kCsvHeader);
    out += '\n';
    auto row = [&out](int epoch, std::size_t index, std::string_view name, std::string_view side,
                      const std::string& split, std::size_t n, std::size_t subsets, double value, std::size_t dropped) {
        out += std::to_string(epoch) + ',' + std::to_string(index) + ',' + std::string(name) + ',' +
               std::string(side) + ',' + split + ',' + std::to_string(n) + ',' + std::to_string(subsets) + ',' +
               format_real(value) + ',' + std::to_string(dropped) + '\n';
    };
    // Group END2END rows right after the boundary rows of the same (epoch, split).
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
        const auto& c = r.cells[i];
        row(c.epoch, c.boundary.index, c.boundary.layer_name, side_name(c.boundary.side), c.split,
            c.estimate.n_points, c.estimate.subset_count, c.estimate.value, c.estimate.dropped_tail);
        const bool last_of_group =
            i + 1 == r.cells.size() || r.cells[i + 1].epoch != c.epoch || r.cells[i + 1].split != c.split;
        if (last_of_group)
            if (const auto* e = r.find_end_to_end(c.epoch, c.split))
                row(e->epoch, end_to_end_index(r, e->epoch, e->split), kEndToEnd, "output", e->split, e->n_points, 1,
                    e->error, 0);
    }
    return out;
}

ProfileReport report_from_csv(std::string_view csv) {
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) fail(ErrorCode::Format, "report CSV header mismatch");
    ProfileReport r;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 9) fail(ErrorCode::Format, "report CSV line " + std::to_string(line_no) + ": expected 9 fields");
        try {
            const int epoch = std::stoi(f[0]);
            const double value = std::stod(f[7]);
            if (f[2] == kEndToEnd) {
                r.end_to_end.push_back({epoch, f[4], value, std::stoul(f[5])});
                continue;
            }
            BoundaryCell c;
            c.epoch = epoch;
            c.split = f[4];
            c.boundary = {std::stoul(f[1]), f[2], f[3] == "entry" ? Side::Entry : Side::Exit};
            c.estimate.value = value;
            c.estimate.n_points = std::stoul(f[5]);
            c.estimate.subset_count = std::stoul(f[6]);
            c.estimate.dropped_tail = std::stoul(f[8]);
            r.cells.push_back(std::move(c));
        } catch (const std::logic_error&) {
            fail(ErrorCode::Format, "report CSV line " + std::to_string(line_no) + ": malformed number");
        }
    }
    return r;
}

json report_to_json(const ProfileReport& r) {
    json cells = json::array();
    for (const auto& c : r.cells) cells.push_back(cell_json(c));
    json e2e = json::array();
    for (const auto& e : r.end_to_end) {
        json row = {{"epoch", e.epoch}, {"split", e.split}, {"error", e.error}, {"n_points", e.n_points}};
        // Distance between the classifier's error and the complexity of its output.
        if (const auto idx = end_to_end_index(r, e.epoch, e.split); idx > 0)
            if (const auto* last = r.find(e.epoch, e.split, idx - 1)) {
                row["final_boundary_complexity"] = last->estimate.value;
                row["abs_gap"] = std::abs(last->estimate.value - e.error);
            }
        e2e.push_back(std::move(row));
    }
    return {{"config", r.config}, {"wall_seconds", r.wall_seconds}, {"cells", cells}, {"end_to_end", e2e}};
}

ProfileReport report_from_json(const json& j) {
    ProfileReport r;
    try {
        if (j.contains("config")) r.config = j.at("config");
        r.wall_seconds = j.value("wall_seconds", 0.0);
        for (const auto& c : j.at("cells")) {
            BoundaryCell cell;
            cell.epoch = c.at("epoch").get<int>();
            cell.split = c.at("split").get<std::string>();
            cell.boundary = {c.at("boundary_index").get<std::size_t>(), c.at("boundary_name").get<std::string>(),
                             c.at("side").get<std::string>() == "entry" ? Side::Entry : Side::Exit};
            cell.estimate.value = c.at("complexity").get<double>();
            cell.estimate.n_points = c.at("n_points").get<std::size_t>();
            cell.estimate.subset_count = c.at("subset_count").get<std::size_t>();
            cell.estimate.subset_size = c.value("subset_size", std::size_t{0});
            cell.estimate.per_subset = c.value("per_subset", std::vector<double>{});
            cell.estimate.dropped_tail = c.at("dropped_tail").get<std::size_t>();
            r.cells.push_back(std::move(cell));
        }
        for (const auto& e : j.at("end_to_end"))
            r.end_to_end.push_back({e.at("epoch").get<int>(), e.at("split").get<std::string>(),
                                    e.at("error").get<double>(), e.at("n_points").get<std::size_t>()});
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, std::string("report JSON: ") + e.what());
    }
    return r;
}

json report_to_plot_series(const ProfileReport& r) {
    // One series per (split, epoch): boundary_index -> complexity, network order.
    json by_split = json::object();
    for (const auto& c : r.cells) {
        auto& series = by_split[c.split];
        if (series.is_null()) series = json::array();
        if (series.empty() || series.back().at("epoch").get<int>() != c.epoch) {
            json s = {{"epoch", c.epoch}, {"boundaries", json::array()}, {"points", json::array()}};
            if (const auto* e = r.find_end_to_end(c.epoch, c.split)) s["end_to_end"] = e->error;
            series.push_back(std::move(s));
        }
        auto& s = series.back();
        s["boundaries"].push_back(c.boundary.layer_name + "." + std::string(side_name(c.boundary.side)));
        s["points"].push_back(json::array({c.boundary.index, c.estimate.value}));
    }
    return {{"series", by_split}};
}

void emit_report(const ProfileReport& r, ReportFormat format, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    switch (format) {
        case ReportFormat::Csv: out << report_to_csv(r); break;
        case ReportFormat::Json: out << report_to_json(r).dump(2) << '\n'; break;
        case ReportFormat::PlotSeries: out << report_to_plot_series(r).dump(2) << '\n'; break;
    }
    if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace repcx
