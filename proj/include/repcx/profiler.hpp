#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "repcx/knn.hpp"
#include "repcx/lenet.hpp"
#include "repcx/point_set.hpp"
#include "repcx/tensor.hpp"

namespace repcx {

struct Reduction {
    std::size_t stride = 1;
    std::size_t offset = 0;
};

struct SubsampleSpec {
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

struct DatasetPaths {
    std::filesystem::path images;
    std::filesystem::path labels;
};

/// What to measure in a run directory.
struct RunConfig {
    Variant variant = Variant::Basic;
    std::map<std::string, DatasetPaths> datasets;  // by split name; weights runs only
    std::vector<int> epochs;                       // 1-based, strictly increasing
    std::vector<std::string> splits{"train", "test"};
    std::size_t subset_size = 10000;
    std::optional<Reduction> reduction;  // applied to the train split
    CaptureMode capture_mode = CaptureMode::Eval;
    std::optional<std::uint64_t> dropout_seed;
    std::optional<SubsampleSpec> subsample;
    std::size_t threads = 0;  // not serialized

    void validate() const;
};

/// Parses a JSON run configuration. Relative dataset paths resolve against
/// `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

struct BoundaryCell {
    int epoch = 0;
    std::string split;
    BoundaryId boundary;
    ComplexityEstimate estimate;

    friend bool operator==(const BoundaryCell&, const BoundaryCell&) = default;
};

struct EndToEndCell {
    int epoch = 0;
    std::string split;
    double error = 0.0;
    std::size_t n_points = 0;

    friend bool operator==(const EndToEndCell&, const EndToEndCell&) = default;
};

/// Complexity per (epoch, split, boundary), ordered epoch-major, then split
/// in configured order, then network order; plus end-to-end errors when the
/// run carries weights.
struct ProfileReport {
    std::vector<BoundaryCell> cells;
    std::vector<EndToEndCell> end_to_end;
    nlohmann::json config;  // echo of the run configuration
    double wall_seconds = 0.0;

    const BoundaryCell* find(int epoch, std::string_view split, std::size_t boundary_index) const;
    const EndToEndCell* find_end_to_end(int epoch, std::string_view split) const;

    /// Compares measured values only (ignores timing and config echo).
    bool same_results(const ProfileReport& other) const {
        return cells == other.cells && end_to_end == other.end_to_end;
    }
};

/// Keeps rows offset, offset + stride, ... in stored order.
std::vector<std::size_t> reduce_indices(std::size_t total, std::size_t stride, std::size_t offset);
LabeledPointSet reduce_dataset(const LabeledPointSet& set, std::size_t stride, std::size_t offset);

/// Optional subsample, then the subset-mean estimator (a single LOO pass when
/// N <= m).
ComplexityEstimate measure_point_set(const LabeledPointSet& set, std::size_t subset_size,
                                     const std::optional<SubsampleSpec>& subsample, std::size_t threads = 0);

/// Complexity of one boundary dump: `trace` is [N, ...] with one row per
/// sample, flattened row-major.
ComplexityEstimate measure_boundary(const Tensor& trace, std::span<const Label> labels, std::size_t subset_size,
                                    const std::optional<SubsampleSpec>& subsample, std::size_t threads = 0);
ComplexityEstimate measure_boundary(const std::filesystem::path& trace_file, const std::filesystem::path& labels_file,
                                    std::size_t subset_size, const std::optional<SubsampleSpec>& subsample,
                                    std::size_t threads = 0);

/// "epoch_007" style directory name.
std::string epoch_dir_name(int epoch);

/// Parses "<index>_<name>_<side>.<ext>"; nullopt for other names.
std::optional<BoundaryId> parse_boundary_file_name(const std::string& file_name);

/// Runs every configured (epoch, split): forward capture from
/// run/epoch_NNN/ weight bundles, or ingestion of run/epoch_NNN/traces/<split>/
/// dumps with labels in run/labels_<split>.{rtd,npy}.
ProfileReport profile_run(const RunConfig& cfg, const std::filesystem::path& run_dir);

enum class ReportFormat { Csv, Json, PlotSeries };

std::string report_to_csv(const ProfileReport& r);
nlohmann::json report_to_json(const ProfileReport& r);
nlohmann::json report_to_plot_series(const ProfileReport& r);

/// Inverse of report_to_csv (per-subset values are not part of the CSV).
ProfileReport report_from_csv(std::string_view csv);
ProfileReport report_from_json(const nlohmann::json& j);

void emit_report(const ProfileReport& r, ReportFormat format, const std::filesystem::path& path);

}  // namespace repcx
