// Synthetic run directories for profiler, CLI and acceptance tests.
#pragma once

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "repcx/lenet.hpp"
#include "repcx/profiler.hpp"
#include "repcx/tensor_io.hpp"
#include "repcx/weights.hpp"

namespace fixture {

namespace fs = std::filesystem;
using namespace repcx;

inline LeNetWeights random_weights(std::uint64_t seed, Variant variant) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, 0.25f);
    std::array<Tensor, kParamCount> params;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const Dims d = lenet_param_specs()[i].dims();
        std::vector<float> v(element_count(d));
        for (auto& x : v) x = g(rng);
        params[i] = Tensor(d, std::move(v));
    }
    return LeNetWeights(std::move(params), variant);
}

struct ImageSet {
    Tensor images;  // [N, 1, 32, 32] f32
    std::vector<Label> labels;
};

/// Blurry per-class blobs, so the network sees some class structure.
inline ImageSet random_images(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> px(n * 1024, 0.0f);
    std::vector<Label> labels(n);
    for (std::size_t s = 0; s < n; ++s) {
        labels[s] = static_cast<Label>(rng() % 10);
        const float cy = 8.0f + 1.6f * static_cast<float>(labels[s]), cx = 24.0f - 1.6f * static_cast<float>(labels[s]);
        for (std::size_t y = 2; y < 30; ++y)
            for (std::size_t x = 2; x < 30; ++x) {
                const float dy = static_cast<float>(y) - cy, dx = static_cast<float>(x) - cx;
                const float v = std::exp(-(dy * dy + dx * dx) / 18.0f) + 0.3f * u(rng);
                px[s * 1024 + y * 32 + x] = std::min(1.0f, v);
            }
    }
    return {Tensor({n, 1, 32, 32}, std::move(px)), std::move(labels)};
}

struct WeightsRun {
    fs::path run_dir;
    fs::path config;
    std::vector<LeNetWeights> weights;  // one per epoch, epoch 1 first
    std::map<std::string, ImageSet> data;
};

/// run_dir/epoch_NNN/{manifest.json,weights.bin}, datasets under run_dir/data
/// and a config.json with relative paths.
inline WeightsRun make_weights_run(const fs::path& root, int epochs, Variant variant,
                                   const std::map<std::string, std::size_t>& split_sizes, std::size_t subset_size,
                                   std::uint64_t seed, nlohmann::json extra = nlohmann::json::object()) {
    WeightsRun run;
    run.run_dir = root / "run";
    fs::create_directories(run.run_dir / "data");
    nlohmann::json cfg = {{"variant", std::string(variant_name(variant))},
                          {"subset_size", subset_size},
                          {"epochs", nlohmann::json::array()},
                          {"splits", nlohmann::json::array()},
                          {"datasets", nlohmann::json::object()}};
    for (int e = 1; e <= epochs; ++e) {
        run.weights.push_back(random_weights(seed * 1000 + static_cast<std::uint64_t>(e), variant));
        save_weights(run.weights.back(), run.run_dir / epoch_dir_name(e));
        cfg["epochs"].push_back(e);
    }
    std::uint64_t k = 0;
    for (const auto& [split, n] : split_sizes) {
        auto set = random_images(n, seed * 7919 + ++k);
        save_tensor(set.images, run.run_dir / "data" / (split + "_images.rtd"));
        save_npy(labels_to_tensor(set.labels), run.run_dir / "data" / (split + "_labels.npy"));
        cfg["splits"].push_back(split);
        cfg["datasets"][split] = {{"images", "data/" + split + "_images.rtd"},
                                  {"labels", "data/" + split + "_labels.npy"}};
        run.data.emplace(split, std::move(set));
    }
    cfg.update(extra);
    run.config = run.run_dir / "config.json";
    std::ofstream(run.config) << cfg.dump(2);
    return run;
}

/// Recomputes every cell with per-sample forward passes and the naive
/// O(N^2 D) search.
inline ProfileReport brute_force_report(const WeightsRun& run, const RunConfig& cfg) {
    ProfileReport r;
    for (int epoch : cfg.epochs) {
        const LeNetWeights& w = run.weights[static_cast<std::size_t>(epoch - 1)];
        for (const auto& split : cfg.splits) {
            const ImageSet& set = run.data.at(split);
            std::vector<std::size_t> rows(set.labels.size());
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
            if (cfg.reduction && split == "train") {
                rows.clear();
                for (std::size_t i = cfg.reduction->offset; i < set.labels.size(); i += cfg.reduction->stride)
                    rows.push_back(i);
            }
            const auto boundaries = network_boundaries(w.variant());
            std::vector<oracle::Points> per_boundary(boundaries.size());
            std::size_t wrong = 0;
            for (std::size_t r_i = 0; r_i < rows.size(); ++r_i) {
                const std::size_t row = rows[r_i];
                const Tensor img({1, 32, 32}, std::vector<float>(set.images.values<float>().begin() + row * 1024,
                                                                 set.images.values<float>().begin() + (row + 1) * 1024));
                const auto fwd = forward(w, img, cfg.capture_mode, cfg.dropout_seed, row);
                for (std::size_t b = 0; b < boundaries.size(); ++b) {
                    auto& p = per_boundary[b];
                    const auto v = fwd.trace.boundaries[b].values<float>();
                    p.dim = v.size();
                    p.values.insert(p.values.end(), v.begin(), v.end());
                    p.labels.push_back(set.labels[row]);
                    ++p.n;
                }
                const auto eval = forward(w, img);
                std::size_t best = 0;
                for (std::size_t c = 1; c < 10; ++c)
                    if (eval.logits[c] > eval.logits[best]) best = c;
                wrong += static_cast<Label>(best) != set.labels[row];
            }
            for (std::size_t b = 0; b < boundaries.size(); ++b) {
                BoundaryCell c;
                c.epoch = epoch;
                c.split = split;
                c.boundary = boundaries[b];
                c.estimate.value = oracle::subset_mean(per_boundary[b], cfg.subset_size);
                c.estimate.n_points = rows.size();
                r.cells.push_back(c);
            }
            r.end_to_end.push_back({epoch, split, static_cast<double>(wrong) / static_cast<double>(rows.size()),
                                    rows.size()});
        }
    }
    return r;
}

/// Same values and order; ignores per-subset detail the oracle does not keep.
inline bool same_values(const ProfileReport& got, const ProfileReport& want) {
    if (got.cells.size() != want.cells.size() || got.end_to_end != want.end_to_end) return false;
    for (std::size_t i = 0; i < got.cells.size(); ++i) {
        const auto &a = got.cells[i], &b = want.cells[i];
        if (a.epoch != b.epoch || a.split != b.split || !(a.boundary == b.boundary) ||
            a.estimate.value != b.estimate.value || a.estimate.n_points != b.estimate.n_points)
            return false;
    }
    return true;
}

struct TraceRun {
    fs::path run_dir;
    // [epoch-1][split] -> boundary dumps in index order
    std::vector<std::map<std::string, std::vector<std::pair<BoundaryId, oracle::Points>>>> dumps;
};

/// Activation dumps from some other network: stem/block/head boundaries of
/// varied shapes, mixed RTD/NPY and f32/f64, labels shared per split.
inline TraceRun make_trace_run(const fs::path& root, int epochs, const std::map<std::string, std::size_t>& split_sizes,
                               std::uint64_t seed) {
    struct Spec {
        const char* name;
        Side side;
        Dims dims;
        bool npy;
        bool f64;
    };
    const std::vector<Spec> specs = {
        {"stem", Side::Entry, {3, 8, 8}, false, false},   {"stem", Side::Exit, {8, 4, 4}, true, false},
        {"layer1_0", Side::Exit, {8, 4, 4}, false, true}, {"layer2_0", Side::Exit, {16, 2, 2}, true, true},
        {"avgpool", Side::Exit, {16}, false, false},      {"fc", Side::Exit, {10}, true, false},
    };
    TraceRun run;
    run.run_dir = root / "run";
    fs::create_directories(run.run_dir);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::map<std::string, std::vector<Label>> labels;
    for (const auto& [split, n] : split_sizes) {
        std::vector<Label> l(n);
        for (auto& x : l) x = static_cast<Label>(rng() % 5);
        labels[split] = l;
        if (split == "test")
            save_npy(labels_to_tensor(l), run.run_dir / ("labels_" + split + ".npy"));
        else
            save_tensor(labels_to_tensor(l), run.run_dir / ("labels_" + split + ".rtd"));
    }
    for (int e = 1; e <= epochs; ++e) {
        run.dumps.emplace_back();
        for (const auto& [split, n] : split_sizes) {
            const fs::path dir = run.run_dir / epoch_dir_name(e) / "traces" / split;
            fs::create_directories(dir);
            auto& out = run.dumps.back()[split];
            for (std::size_t b = 0; b < specs.size(); ++b) {
                const auto& s = specs[b];
                const std::size_t d = element_count(s.dims);
                oracle::Points p;
                p.n = n;
                p.dim = d;
                p.labels = labels[split];
                std::vector<double> dv(n * d);
                for (std::size_t i = 0; i < n; ++i) {
                    const double shift = static_cast<double>(p.labels[i]) * 0.5 * static_cast<double>(b);
                    for (std::size_t k = 0; k < d; ++k) dv[i * d + k] = g(rng) + (k % 3 == 0 ? shift : 0.0);
                }
                Dims full = {n};
                full.insert(full.end(), s.dims.begin(), s.dims.end());
                Tensor t = s.f64 ? Tensor(full, dv) : Tensor(full, std::vector<float>(dv.begin(), dv.end()));
                p.values.assign(dv.begin(), dv.end());  // the profiler measures in f32
                std::string idx = std::to_string(b);
                if (idx.size() < 2) idx.insert(0, "0");
                const std::string file =
                    idx + "_" + s.name + "_" + std::string(side_name(s.side)) + (s.npy ? ".npy" : ".rtd");
                if (s.npy)
                    save_npy(t, dir / file);
                else
                    save_rtd(t, dir / file);
                out.push_back({BoundaryId{b, s.name, s.side}, std::move(p)});
            }
            std::ofstream(dir / "README.txt") << "not a dump\n";
        }
    }
    return run;
}

inline ProfileReport brute_force_report(const TraceRun& run, const RunConfig& cfg) {
    ProfileReport r;
    for (int epoch : cfg.epochs)
        for (const auto& split : cfg.splits)
            for (const auto& [id, full] : run.dumps[static_cast<std::size_t>(epoch - 1)].at(split)) {
                oracle::Points p = full;
                if (cfg.reduction && split == "train") {
                    oracle::Points q;
                    q.dim = p.dim;
                    for (std::size_t i = cfg.reduction->offset; i < p.n; i += cfg.reduction->stride) {
                        q.values.insert(q.values.end(), p.row(i), p.row(i) + p.dim);
                        q.labels.push_back(p.labels[i]);
                        ++q.n;
                    }
                    p = std::move(q);
                }
                BoundaryCell c;
                c.epoch = epoch;
                c.split = split;
                c.boundary = id;
                c.estimate.value = oracle::subset_mean(p, cfg.subset_size);
                c.estimate.n_points = p.n;
                r.cells.push_back(c);
            }
    return r;
}

}  // namespace fixture
