#include "repcx/profiler.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include "repcx/error.hpp"
#include "repcx/tensor_io.hpp"
#include "repcx/weights.hpp"

namespace repcx {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

// Which rows of a split survive reduction and subsampling, in stored order.
std::vector<std::size_t> selected_rows(const RunConfig& cfg, const std::string& split, std::size_t total) {
    std::vector<std::size_t> rows(total);
    for (std::size_t i = 0; i < total; ++i) rows[i] = i;
    if (cfg.reduction && split == "train") rows = reduce_indices(total, cfg.reduction->stride, cfg.reduction->offset);
    if (cfg.subsample) {
        const auto pick = subsample_indices(rows.size(), cfg.subsample->n, cfg.subsample->seed);
        std::vector<std::size_t> kept;
        kept.reserve(pick.size());
        for (auto p : pick) kept.push_back(rows[p]);
        rows = std::move(kept);
    }
    return rows;
}

void require_epoch_dirs(const RunConfig& cfg, const fs::path& run_dir) {
    std::vector<std::string> missing;
    for (int e : cfg.epochs)
        if (!fs::is_directory(run_dir / epoch_dir_name(e))) missing.push_back(epoch_dir_name(e));
    if (missing.empty()) return;
    std::set<std::string> found;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(run_dir, ec))
        if (entry.is_directory() && entry.path().filename().string().rfind("epoch_", 0) == 0)
            found.insert(entry.path().filename().string());
    std::string msg = "run directory " + run_dir.string() + " is missing";
    for (const auto& m : missing) msg += " " + m;
    msg += "; found:";
    if (found.empty()) msg += " (none)";
    for (const auto& f : found) msg += " " + f;
    fail(ErrorCode::Validation, msg);
}

fs::path find_labels(const fs::path& run_dir, const std::string& split) {
    for (const char* ext : {".rtd", ".npy"}) {
        auto p = run_dir / ("labels_" + split + ext);
        if (fs::exists(p)) return p;
    }
    fail(ErrorCode::Validation, "no labels_" + split + ".rtd or .npy in " + run_dir.string());
}

struct TraceFile {
    BoundaryId id;
    fs::path path;
};

std::vector<TraceFile> list_traces(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorCode::Validation, "missing trace directory " + dir.string());
    std::vector<TraceFile> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext != ".rtd" && ext != ".npy") continue;
        if (auto id = parse_boundary_file_name(entry.path().filename().string()))
            files.push_back({*id, entry.path()});
    }
    std::sort(files.begin(), files.end(), [](const TraceFile& a, const TraceFile& b) { return a.id.index < b.id.index; });
    for (std::size_t i = 1; i < files.size(); ++i)
        if (files[i].id.index == files[i - 1].id.index)
            fail(ErrorCode::Validation, "duplicate boundary index " + std::to_string(files[i].id.index) + " in " +
                                            dir.string());
    if (files.empty()) fail(ErrorCode::Validation, "no boundary dumps in " + dir.string());
    return files;
}

void profile_traces(const RunConfig& cfg, const fs::path& run_dir, int epoch, const std::string& split,
                    ProfileReport& report) {
    const auto labels = labels_from_tensor(load_tensor(find_labels(run_dir, split)));
    const auto rows = selected_rows(cfg, split, labels.size());
    std::vector<Label> kept_labels;
    kept_labels.reserve(rows.size());
    for (auto r : rows) kept_labels.push_back(labels[r]);

    for (const auto& file : list_traces(run_dir / epoch_dir_name(epoch) / "traces" / split)) {
        const Tensor full = load_tensor(file.path);
        if (full.rank() == 0 || full.dims()[0] != labels.size())
            fail(ErrorCode::Validation, file.path.string() + ": expected " + std::to_string(labels.size()) +
                                            " samples to match labels");
        const Tensor trace = take_rows(full, rows);
        report.cells.push_back(
            {epoch, split, file.id, measure_boundary(trace, kept_labels, cfg.subset_size, std::nullopt, cfg.threads)});
    }
}

LabeledPointSet rows_as_points(const Tensor& batch, std::span<const Label> labels) {
    const std::size_t n = batch.dims()[0];
    return LabeledPointSet(flatten(batch), n == 0 ? 0 : batch.size() / n,
                           std::vector<Label>(labels.begin(), labels.end()));
}

void profile_weights(const RunConfig& cfg, const fs::path& run_dir, int epoch, const std::string& split,
                     const LabeledPointSet& data, std::span<const std::uint64_t> sample_ids, ProfileReport& report) {
    const LeNetWeights w = load_weights(run_dir / epoch_dir_name(epoch));
    if (w.variant() != cfg.variant)
        fail(ErrorCode::Validation, epoch_dir_name(epoch) + " holds a " + std::string(variant_name(w.variant())) +
                                        " bundle but the run is configured for " +
                                        std::string(variant_name(cfg.variant)));
    const auto boundaries = network_boundaries(w.variant());
    const std::size_t layers = boundaries.size() - 1;
    const std::size_t n = data.size();
    const std::size_t m = cfg.subset_size;
    if (n < 2) fail(ErrorCode::InsufficientData, split + " split has fewer than 2 samples");

    // Process the split in m-sized chunks, one boundary at a time, so memory
    // stays bounded by two boundaries of one chunk. Chunks coincide with the
    // estimator's subsets, so per-chunk LOO errors are the per-subset values.
    const bool chunked = n > m;
    const std::size_t full_chunks = chunked ? n / m : 1;
    const std::size_t chunk_size = chunked ? m : n;
    const std::size_t tail = chunked ? n - full_chunks * m : 0;
    std::vector<std::vector<double>> per_subset(boundaries.size());
    std::vector<Label> predicted(n);
    const std::uint64_t seed = cfg.dropout_seed.value_or(0);

    auto run_chunk = [&](std::size_t begin, std::size_t count, bool measure) {
        const auto labels = data.labels().subspan(begin, count);
        const auto ids = sample_ids.subspan(begin, count);
        const auto pts = data.points().subspan(begin * 1024, count * 1024);
        Tensor batch({count, 1, 32, 32}, std::vector<float>(pts.begin(), pts.end()));
        if (measure) per_subset[0].push_back(loo_nn_error(rows_as_points(batch, labels), cfg.threads).value);
        for (std::size_t l = 0; l < layers; ++l) {
            batch = propagate(w, l, batch, cfg.capture_mode, seed, ids, cfg.threads);
            if (measure) per_subset[l + 1].push_back(loo_nn_error(rows_as_points(batch, labels), cfg.threads).value);
        }
        const auto logits = batch.values<float>();
        for (std::size_t s = 0; s < count; ++s)
            predicted[begin + s] = static_cast<Label>(classify(logits.subspan(s * 10, 10)));
    };
    for (std::size_t c = 0; c < full_chunks; ++c) run_chunk(c * chunk_size, chunk_size, true);
    if (tail > 0) run_chunk(full_chunks * chunk_size, tail, false);

    for (std::size_t b = 0; b < boundaries.size(); ++b) {
        auto est = chunked ? combine_subset_errors(std::move(per_subset[b]), m, n, tail)
                           : combine_subset_errors(std::move(per_subset[b]), n, n, 0);
        report.cells.push_back({epoch, split, boundaries[b], std::move(est)});
    }

    // End-to-end error is always an eval-mode quantity.
    if (cfg.capture_mode != CaptureMode::Eval) predicted = predict_all(w, data, cfg.threads);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) wrong += predicted[i] != data.label(i) ? 1 : 0;
    report.end_to_end.push_back({epoch, split, static_cast<double>(wrong) / static_cast<double>(n), n});
}

}  // namespace

void RunConfig::validate() const {
    if (epochs.empty()) fail(ErrorCode::Validation, "run config lists no epochs");
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        if (epochs[i] < 1) fail(ErrorCode::Validation, "epochs are 1-based");
        if (i > 0 && epochs[i] <= epochs[i - 1]) fail(ErrorCode::Validation, "epochs must be strictly increasing");
    }
    if (splits.empty()) fail(ErrorCode::Validation, "run config lists no splits");
    if (subset_size < 2) fail(ErrorCode::Validation, "subset_size must be at least 2");
    if (reduction && (reduction->stride < 1 || reduction->offset >= reduction->stride))
        fail(ErrorCode::Validation, "reduction needs stride >= 1 and 0 <= offset < stride");
    if (capture_mode == CaptureMode::TrainDropout) {
        if (variant != Variant::Dropout) fail(ErrorCode::Validation, "train-dropout capture needs the dropout variant");
        if (!dropout_seed) fail(ErrorCode::Validation, "train-dropout capture needs dropout_seed");
    }
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
    RunConfig cfg;
    try {
        if (j.contains("variant")) cfg.variant = parse_variant(j.at("variant").get<std::string>());
        cfg.epochs = j.at("epochs").get<std::vector<int>>();
        if (j.contains("splits")) cfg.splits = j.at("splits").get<std::vector<std::string>>();
        if (j.contains("subset_size")) cfg.subset_size = j.at("subset_size").get<std::size_t>();
        if (j.contains("datasets"))
            for (const auto& [split, paths] : j.at("datasets").items())
                cfg.datasets[split] = {resolve(base_dir, paths.at("images").get<std::string>()),
                                       resolve(base_dir, paths.at("labels").get<std::string>())};
        if (j.contains("reduction") && !j.at("reduction").is_null())
            cfg.reduction = Reduction{j.at("reduction").at("stride").get<std::size_t>(),
                                      j.at("reduction").value("offset", std::size_t{0})};
        if (j.contains("capture_mode")) cfg.capture_mode = parse_capture_mode(j.at("capture_mode").get<std::string>());
        if (j.contains("dropout_seed") && !j.at("dropout_seed").is_null())
            cfg.dropout_seed = j.at("dropout_seed").get<std::uint64_t>();
        if (j.contains("subsample") && !j.at("subsample").is_null())
            cfg.subsample = SubsampleSpec{j.at("subsample").at("n").get<std::size_t>(),
                                          j.at("subsample").value("seed", std::uint64_t{0})};
    } catch (const json::exception& e) {
        fail(ErrorCode::Validation, std::string("run config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, path.string() + ": " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

json run_config_to_json(const RunConfig& cfg) {
    json j;
    j["variant"] = variant_name(cfg.variant);
    j["epochs"] = cfg.epochs;
    j["splits"] = cfg.splits;
    j["subset_size"] = cfg.subset_size;
    j["capture_mode"] = capture_mode_name(cfg.capture_mode);
    j["datasets"] = json::object();
    for (const auto& [split, p] : cfg.datasets)
        j["datasets"][split] = {{"images", p.images.string()}, {"labels", p.labels.string()}};
    j["reduction"] = cfg.reduction ? json{{"stride", cfg.reduction->stride}, {"offset", cfg.reduction->offset}} : json();
    j["dropout_seed"] = cfg.dropout_seed ? json(*cfg.dropout_seed) : json();
    j["subsample"] = cfg.subsample ? json{{"n", cfg.subsample->n}, {"seed", cfg.subsample->seed}} : json();
    return j;
}

const BoundaryCell* ProfileReport::find(int epoch, std::string_view split, std::size_t boundary_index) const {
    for (const auto& c : cells)
        if (c.epoch == epoch && c.split == split && c.boundary.index == boundary_index) return &c;
    return nullptr;
}

const EndToEndCell* ProfileReport::find_end_to_end(int epoch, std::string_view split) const {
    for (const auto& c : end_to_end)
        if (c.epoch == epoch && c.split == split) return &c;
    return nullptr;
}

std::vector<std::size_t> reduce_indices(std::size_t total, std::size_t stride, std::size_t offset) {
    if (stride < 1 || offset >= stride)
        fail(ErrorCode::Parameter, "reduction needs stride >= 1 and 0 <= offset < stride (stride " +
                                       std::to_string(stride) + ", offset " + std::to_string(offset) + ")");
    std::vector<std::size_t> out;
    for (std::size_t i = offset; i < total; i += stride) out.push_back(i);
    return out;
}

LabeledPointSet reduce_dataset(const LabeledPointSet& set, std::size_t stride, std::size_t offset) {
    return set.select(reduce_indices(set.size(), stride, offset));
}

ComplexityEstimate measure_point_set(const LabeledPointSet& set, std::size_t subset_size,
                                     const std::optional<SubsampleSpec>& sub, std::size_t threads) {
    if (sub) return subset_mean_complexity(subsample(set, sub->n, sub->seed), subset_size, threads);
    return subset_mean_complexity(set, subset_size, threads);
}

ComplexityEstimate measure_boundary(const Tensor& trace, std::span<const Label> labels, std::size_t subset_size,
                                    const std::optional<SubsampleSpec>& sub, std::size_t threads) {
    if (trace.rank() == 0) fail(ErrorCode::Validation, "boundary dump needs a leading sample axis");
    if (trace.dims()[0] != labels.size())
        fail(ErrorCode::Validation, "boundary dump holds " + std::to_string(trace.dims()[0]) + " samples but " +
                                        std::to_string(labels.size()) + " labels were given");
    return measure_point_set(rows_as_points(trace, labels), subset_size, sub, threads);
}

ComplexityEstimate measure_boundary(const fs::path& trace_file, const fs::path& labels_file, std::size_t subset_size,
                                    const std::optional<SubsampleSpec>& sub, std::size_t threads) {
    const auto labels = labels_from_tensor(load_tensor(labels_file));
    return measure_boundary(load_tensor(trace_file), labels, subset_size, sub, threads);
}

std::string epoch_dir_name(int epoch) {
    std::string digits = std::to_string(epoch);
    if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
    return "epoch_" + digits;
}

std::optional<BoundaryId> parse_boundary_file_name(const std::string& file_name) {
    const auto dot = file_name.rfind('.');
    const std::string stem = file_name.substr(0, dot);
    const auto first = stem.find('_');
    const auto last = stem.rfind('_');
    if (first == std::string::npos || last == first || first == 0) return std::nullopt;
    const std::string idx = stem.substr(0, first);
    if (!std::all_of(idx.begin(), idx.end(), [](char c) { return c >= '0' && c <= '9'; })) return std::nullopt;
    const std::string side = stem.substr(last + 1);
    if (side != "entry" && side != "exit") return std::nullopt;
    return BoundaryId{std::stoul(idx), stem.substr(first + 1, last - first - 1),
                      side == "entry" ? Side::Entry : Side::Exit};
}

ProfileReport profile_run(const RunConfig& cfg, const fs::path& run_dir) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();
    if (!fs::is_directory(run_dir)) fail(ErrorCode::Io, "run directory " + run_dir.string() + " does not exist");
    require_epoch_dirs(cfg, run_dir);

    ProfileReport report;
    report.config = run_config_to_json(cfg);

    // Datasets for weight-bundle epochs are loaded once per split.
    std::map<std::string, std::pair<LabeledPointSet, std::vector<std::uint64_t>>> datasets;
    auto dataset_for = [&](const std::string& split) -> const auto& {
        auto it = datasets.find(split);
        if (it != datasets.end()) return it->second;
        const auto paths = cfg.datasets.find(split);
        if (paths == cfg.datasets.end())
            fail(ErrorCode::Validation, "run config has no dataset for split '" + split + "'");
        const auto full = load_image_set(paths->second.images, paths->second.labels);
        const auto rows = selected_rows(cfg, split, full.size());
        std::vector<std::uint64_t> ids(rows.begin(), rows.end());
        return datasets.emplace(split, std::make_pair(full.select(rows), std::move(ids))).first->second;
    };

    for (int epoch : cfg.epochs) {
        const fs::path dir = run_dir / epoch_dir_name(epoch);
        const bool has_weights = fs::exists(dir / "manifest.json");
        if (!has_weights && !fs::is_directory(dir / "traces"))
            fail(ErrorCode::Validation, dir.string() + " holds neither a weight bundle nor traces/");
        for (const auto& split : cfg.splits) {
            if (has_weights) {
                const auto& [data, ids] = dataset_for(split);
                profile_weights(cfg, run_dir, epoch, split, data, ids, report);
            } else {
                profile_traces(cfg, run_dir, epoch, split, report);
            }
        }
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace repcx
