// repcx: command-line front end for representation-complexity profiling.
//
// Exit codes: 0 success, 1 validation/format/usage error, 2 I/O error.
// Results go to stdout as JSON; diagnostics go to stderr as
// "error[E_CODE]: message".
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "repcx/error.hpp"
#include "repcx/knn.hpp"
#include "repcx/lenet.hpp"
#include "repcx/profiler.hpp"
#include "repcx/tensor_io.hpp"
#include "repcx/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace repcx;

namespace {

std::string one_line(std::string s) {
    for (auto& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

json estimate_json(const ComplexityEstimate& e) {
    return {{"value", e.value},         {"per_subset", e.per_subset},     {"n_points", e.n_points},
            {"subset_count", e.subset_count}, {"subset_size", e.subset_size}, {"dropped_tail", e.dropped_tail}};
}

struct ComplexityArgs {
    std::string tensor, labels;
    std::size_t subset_size = 10000;
    std::optional<std::size_t> subsample;
    std::uint64_t seed = 0;
};

void run_complexity(const ComplexityArgs& a, std::size_t threads) {
    std::optional<SubsampleSpec> sub;
    if (a.subsample) sub = SubsampleSpec{*a.subsample, a.seed};
    const auto est = measure_boundary(fs::path(a.tensor), fs::path(a.labels), a.subset_size, sub, threads);
    std::cout << estimate_json(est).dump() << '\n';
}

struct InferArgs {
    std::string weights, images, labels, out;
    std::string mode = "eval";
    std::optional<std::uint64_t> dropout_seed;
};

void run_infer(const InferArgs& a, std::size_t threads) {
    const LeNetWeights w = load_weights(a.weights);
    const CaptureMode mode = parse_capture_mode(a.mode);
    if (mode == CaptureMode::TrainDropout) {
        if (w.variant() != Variant::Dropout)
            fail(ErrorCode::Validation, "--mode train-dropout needs a dropout bundle");
        if (!a.dropout_seed) fail(ErrorCode::Validation, "--mode train-dropout needs --dropout-seed");
    }
    const LabeledPointSet images = load_image_set(a.images, a.labels);
    const std::size_t n = images.size();
    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + a.out + ": " + ec.message());
    const fs::path out(a.out);

    std::vector<std::uint64_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    const auto boundaries = network_boundaries(w.variant());
    Tensor batch({n, 1, 32, 32}, std::vector<float>(images.points().begin(), images.points().end()));
    save_tensor(batch, out / boundary_file_name(boundaries[0]));
    for (std::size_t l = 0; l + 1 < boundaries.size(); ++l) {
        batch = propagate(w, l, batch, mode, a.dropout_seed.value_or(0), ids, threads);
        save_tensor(batch, out / boundary_file_name(boundaries[l + 1]));
    }

    std::vector<Label> predicted;
    if (mode == CaptureMode::Eval) {
        const auto logits = batch.values<float>();
        for (std::size_t s = 0; s < n; ++s) predicted.push_back(static_cast<Label>(classify(logits.subspan(s * 10, 10))));
    } else {
        predicted = predict_all(w, images, threads);
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) wrong += predicted[i] != images.label(i) ? 1 : 0;
    save_tensor(labels_to_tensor(images.labels()), out / "labels.rtd");
    save_tensor(labels_to_tensor(predicted), out / "predictions.rtd");

    json summary = {{"n_images", n},
                    {"boundaries", boundaries.size()},
                    {"mode", capture_mode_name(mode)},
                    {"end_to_end_error", n == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(n)}};
    std::cout << summary.dump() << '\n';
}

struct ProfileArgs {
    std::string run_dir, config, out;
};

void run_profile(const ProfileArgs& a, std::size_t threads) {
    RunConfig cfg = load_run_config(a.config);
    cfg.threads = threads;
    const auto report = profile_run(cfg, a.run_dir);
    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + a.out + ": " + ec.message());
    const fs::path out(a.out);
    emit_report(report, ReportFormat::Csv, out / "report.csv");
    emit_report(report, ReportFormat::Json, out / "report.json");
    emit_report(report, ReportFormat::PlotSeries, out / "series.json");
    std::cerr << "profiled " << report.cells.size() << " cells in " << report.wall_seconds << " s\n";
    json summary = {{"cells", report.cells.size()},
                    {"end_to_end", report.end_to_end.size()},
                    {"outputs", {(out / "report.csv").string(), (out / "report.json").string(),
                                 (out / "series.json").string()}}};
    std::cout << summary.dump() << '\n';
}

struct ReduceArgs {
    std::string in, out;
    std::string labels_in, labels_out;
    std::size_t stride = 6;
    std::size_t offset = 0;
};

void reduce_file(const std::string& in, const std::string& out, std::size_t stride, std::size_t offset,
                 std::optional<std::size_t> expected_rows) {
    const Tensor t = load_tensor(in);
    if (t.rank() == 0) fail(ErrorCode::Dimension, in + ": tensor needs a leading sample axis");
    if (expected_rows && t.dims()[0] != *expected_rows)
        fail(ErrorCode::Validation, in + ": holds " + std::to_string(t.dims()[0]) + " samples, expected " +
                                        std::to_string(*expected_rows));
    const auto rows = reduce_indices(t.dims()[0], stride, offset);
    save_tensor_as(take_rows(t, rows), out, detect_format(in));
}

void run_reduce(const ReduceArgs& a) {
    if (a.labels_in.empty() != a.labels_out.empty())
        fail(ErrorCode::Validation, "--labels-in and --labels-out must be given together");
    const std::size_t total = load_tensor(a.in).dims().at(0);
    reduce_file(a.in, a.out, a.stride, a.offset, std::nullopt);
    if (!a.labels_in.empty()) reduce_file(a.labels_in, a.labels_out, a.stride, a.offset, total);
    const auto kept = reduce_indices(total, a.stride, a.offset).size();
    std::cout << json{{"input_samples", total}, {"output_samples", kept}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Layer-by-layer representation complexity (leave-one-out 1-NN error) for LeNet-5 runs "
                 "and ingested activation dumps"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores); outputs do not depend on it")
        ->envname("REPCX_THREADS");

    ComplexityArgs ca;
    auto* complexity = app.add_subcommand("complexity", "Leave-one-out 1-NN error of a point set, printed as JSON");
    complexity->add_option("tensor", ca.tensor, "Samples [N, ...] (RTD or NPY)")->required();
    complexity->add_option("labels", ca.labels, "Labels [N] (i64 or u8, RTD or NPY)")->required();
    complexity->add_option("--subset-size", ca.subset_size, "Subset size m for the subset-mean estimator")
        ->capture_default_str();
    complexity->add_option("--subsample", ca.subsample, "Measure a uniform sample of this many points");
    complexity->add_option("--seed", ca.seed, "Seed for --subsample")->capture_default_str();

    InferArgs ia;
    auto* infer = app.add_subcommand("infer", "Run the network, dump every boundary tensor and predictions");
    infer->add_option("--weights", ia.weights, "LNW1 weight bundle directory")->required();
    infer->add_option("--images", ia.images, "IDX image file, or RTD/NPY [N,1,32,32]")->required();
    infer->add_option("--labels", ia.labels, "IDX/RTD/NPY labels")->required();
    infer->add_option("--out", ia.out, "Output directory")->required();
    infer->add_option("--mode", ia.mode, "Capture mode")
        ->check(CLI::IsMember({"eval", "train-dropout"}))
        ->capture_default_str();
    infer->add_option("--dropout-seed", ia.dropout_seed, "Dropout mask seed (train-dropout mode)");

    ProfileArgs pa;
    auto* profile = app.add_subcommand("profile", "Profile complexity over epochs, boundaries and splits");
    profile->add_option("--run-dir", pa.run_dir, "Run directory with epoch_NNN/ subdirectories")->required();
    profile->add_option("--config", pa.config, "Run configuration (JSON)")->required();
    profile->add_option("--out", pa.out, "Output directory for report.csv, report.json, series.json")->required();

    ReduceArgs ra;
    auto* reduce = app.add_subcommand("reduce", "Keep every stride-th sample starting at offset");
    reduce->add_option("--in", ra.in, "Input samples (RTD, NPY or IDX)")->required();
    reduce->add_option("--out", ra.out, "Output file, written in the input's format")->required();
    reduce->add_option("--labels-in", ra.labels_in, "Optional labels file reduced alongside");
    reduce->add_option("--labels-out", ra.labels_out, "Output path for reduced labels");
    reduce->add_option("--stride", ra.stride, "Keep every stride-th sample")->capture_default_str();
    reduce->add_option("--offset", ra.offset, "Index of the first kept sample")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error[E_USAGE]: " << one_line(e.what()) << '\n';
        return 1;
    }

    try {
        if (*complexity) run_complexity(ca, threads);
        if (*infer) run_infer(ia, threads);
        if (*profile) run_profile(pa, threads);
        if (*reduce) run_reduce(ra);
    } catch (const Error& e) {
        std::cerr << "error[" << error_tag(e.code()) << "]: " << one_line(e.what()) << '\n';
        return e.code() == ErrorCode::Io ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error[E_INTERNAL]: " << one_line(e.what()) << '\n';
        return 1;
    }
    return 0;
}
