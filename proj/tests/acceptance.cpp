// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes. Budgets and tolerances are fixed below.
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <thread>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "repcx/knn.hpp"
#include "repcx/lenet.hpp"
#include "repcx/parallel.hpp"
#include "repcx/profiler.hpp"

using namespace repcx;
namespace fs = std::filesystem;

namespace {

constexpr int kOracleInstances = 100;
constexpr double kOracleSuiteBudgetS = 60.0;
constexpr double kLooBudgetS = 60.0;               // 10000 x 1024
constexpr double kTrainEvalBudgetS = 6.0 * kLooBudgetS;  // 6 subsets of 10000
constexpr double kTanhTolerance = 1e-12;
constexpr int kInvarianceSets = 20;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

std::vector<std::size_t> thread_counts() {
    std::set<std::size_t> s = {1, 2, default_threads()};
    return {s.begin(), s.end()};
}

LabeledPointSet to_set(const oracle::Points& p) { return LabeledPointSet(p.values, p.dim, p.labels); }

std::vector<float> random_vec(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

Outcome oracle_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    const oracle::Shape shapes[] = {oracle::Shape::Uniform, oracle::Shape::Clustered, oracle::Shape::IntegerGrid,
                                    oracle::Shape::Duplicates, oracle::Shape::FarOffset};
    std::size_t mismatches = 0, points = 0;
    for (int k = 0; k < kOracleInstances; ++k) {
        const std::size_t n = 10 + rng() % 991;
        const std::size_t dim = 1 + rng() % 64;
        const int classes = 2 + static_cast<int>(rng() % 9);
        const auto p = oracle::random_points(rng, n, dim, classes, shapes[k % 5]);
        const auto got = loo_nn_predictions(to_set(p));
        const auto nn = oracle::neighbors(p);
        for (std::size_t i = 0; i < n; ++i) mismatches += got[i] != p.labels[nn[i]];
        points += n;
    }
    const double s = seconds_since(t0);
    return {mismatches == 0 && s < kOracleSuiteBudgetS,
            std::to_string(kOracleInstances) + " instances, " + std::to_string(points) + " points, " +
                std::to_string(mismatches) + " mismatches, " + std::to_string(s) + " s (budget " +
                std::to_string(kOracleSuiteBudgetS) + " s)"};
}

Outcome determinism() {
    const auto threads = thread_counts();
    std::mt19937_64 rng(7);
    const auto p = oracle::random_points(rng, 3000, 96, 10, oracle::Shape::IntegerGrid);
    const auto set = to_set(p);
    const auto ref = loo_nn_error(set, 1);
    bool ok = true;
    for (int run = 0; run < 2; ++run)
        for (auto t : threads) ok = ok && loo_nn_error(set, t) == ref;

    const auto root = oracle::scratch_dir("acceptance_det");
    const auto wrun = fixture::make_weights_run(root / "w", 2, Variant::Dropout, {{"train", 60}, {"test", 45}}, 20, 3,
                                                {{"capture_mode", "train-dropout"}, {"dropout_seed", 99}});
    const auto trun = fixture::make_trace_run(root / "t", 1, {{"train", 40}, {"test", 30}}, 4);
    RunConfig wcfg = load_run_config(wrun.config);
    RunConfig tcfg;
    tcfg.epochs = {1};
    tcfg.splits = {"train", "test"};
    tcfg.subset_size = 15;
    std::size_t checked = 0;
    for (RunConfig* cfg : {&wcfg, &tcfg}) {
        const fs::path& dir = cfg == &wcfg ? wrun.run_dir : trun.run_dir;
        cfg->threads = 1;
        const auto base = profile_run(*cfg, dir);
        const auto base_csv = report_to_csv(base);
        for (int run = 0; run < 2; ++run)
            for (auto t : threads) {
                cfg->threads = t;
                const auto r = profile_run(*cfg, dir);
                ok = ok && r.same_results(base) && report_to_csv(r) == base_csv;
                ++checked;
            }
    }
    std::string ts;
    for (auto t : threads) ts += (ts.empty() ? "" : ",") + std::to_string(t);
    return {ok, "threads {" + ts + "} x 2 runs; loo value " + std::to_string(ref.value) + "; " +
                    std::to_string(checked) + " profile reruns compared"};
}

Outcome performance() {
    // MNIST-sized synthetic images: 1x32x32, values in [0, 1], zero border.
    const auto test = fixture::random_images(10000, 11);
    const LabeledPointSet test_set(flatten(test.images), 1024, test.labels, 10);
    auto t0 = Clock::now();
    const auto loo = loo_nn_error(test_set);
    const double loo_s = seconds_since(t0);

    const auto train = fixture::random_images(60000, 12);
    const LabeledPointSet train_set(flatten(train.images), 1024, train.labels, 10);
    t0 = Clock::now();
    const auto six = subset_mean_complexity(train_set, 10000);
    const double six_s = seconds_since(t0);

    const bool ok = loo_s <= kLooBudgetS && six_s <= kTrainEvalBudgetS && six.subset_count == 6;
    return {ok, "10000x1024: " + std::to_string(loo_s) + " s (budget " + std::to_string(kLooBudgetS) +
                    "), 6x10000: " + std::to_string(six_s) + " s (budget " + std::to_string(kTrainEvalBudgetS) +
                    "), " + std::to_string(default_threads()) + " hardware threads, values " +
                    std::to_string(loo.value) + " / " + std::to_string(six.value)};
}

std::vector<float> as_vec(const Tensor& t) {
    const auto v = t.values<float>();
    return {v.begin(), v.end()};
}

Outcome kernel_oracles() {
    std::mt19937_64 rng(5);
    std::size_t shapes = 0, failures = 0;
    for (std::size_t c_in = 1; c_in <= 3; ++c_in)
        for (std::size_t c_out = 1; c_out <= 3; ++c_out)
            for (std::size_t h = 1; h <= 7; ++h)
                for (std::size_t w = 1; w <= 7; ++w)
                    for (std::size_t k = 1; k <= std::min<std::size_t>({h, w, 5}); ++k)
                        for (std::size_t stride = 1; stride <= 2; ++stride) {
                            const auto in = random_vec(rng, c_in * h * w), ker = random_vec(rng, c_out * c_in * k * k),
                                       bias = random_vec(rng, c_out);
                            const auto got = as_vec(conv2d_valid(Tensor({c_in, h, w}, in),
                                                                 Tensor({c_out, c_in, k, k}, ker), Tensor({c_out}, bias),
                                                                 stride));
                            failures += got != oracle::conv2d(in, c_in, h, w, ker, c_out, k, bias, stride);
                            ++shapes;
                        }
    for (std::size_t c = 1; c <= 4; ++c)
        for (std::size_t h = 2; h <= 12; h += 2)
            for (std::size_t w = 2; w <= 12; w += 2) {
                const auto in = random_vec(rng, c * h * w);
                failures += as_vec(avgpool2(Tensor({c, h, w}, in))) != oracle::avgpool2(in, c, h, w);
                ++shapes;
            }
    for (std::size_t ins = 1; ins <= 130; ins += 3)
        for (std::size_t outs : {1u, 2u, 10u, 84u, 120u}) {
            const auto v = random_vec(rng, ins), wt = random_vec(rng, outs * ins), b = random_vec(rng, outs);
            failures += as_vec(linear(Tensor({ins}, v), Tensor({outs, ins}, wt), Tensor({outs}, b))) !=
                        oracle::linear(v, wt, outs, b);
            ++shapes;
        }

    // tanh: double path against 50 digits; the f32 path must be within one
    // f32 rounding of the same oracle.
    std::vector<double> xs;
    std::uniform_real_distribution<double> u(-25.0, 25.0);
    for (int i = 0; i < 5000; ++i) xs.push_back(u(rng));
    for (double x : {0.0, 1e-300, 1e-9, 0.5, 1.0, -1.0, 18.0, 19.5}) xs.push_back(x);
    const Tensor th_t = tanh_map(Tensor({xs.size()}, xs));
    const auto th = th_t.values<double>();
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, std::abs(th[i] - oracle::tanh_exact(xs[i])));
    std::vector<float> xf(xs.begin(), xs.end());
    const Tensor thf_t = tanh_map(Tensor({xf.size()}, xf));
    const auto thf = thf_t.values<float>();
    bool f32_ok = true;
    for (std::size_t i = 0; i < xf.size(); ++i) {
        const double exact = oracle::tanh_exact(static_cast<double>(xf[i]));
        f32_ok = f32_ok && std::abs(thf[i] - exact) <= 0x1p-24 * std::max(std::abs(exact), 0x1p-126) * 1.0001 &&
                 thf[i] > -1.0f && thf[i] < 1.0f;
    }

    const std::vector<Dims> chain = {{1, 32, 32}, {6, 28, 28}, {6, 28, 28}, {6, 14, 14}, {16, 10, 10}, {16, 10, 10},
                                     {16, 5, 5},  {120, 1, 1}, {120},       {84},        {84},         {10}};
    bool chain_ok = true;
    for (Variant v : {Variant::Basic, Variant::Dropout}) {
        const auto r = forward(fixture::random_weights(9, v), Tensor({1, 32, 32}, random_vec(rng, 1024)));
        std::vector<Dims> got;
        const auto layers = network_layers(v);
        got.push_back(r.trace.boundaries[0].dims());
        for (std::size_t l = 0; l < layers.size(); ++l)
            if (layers[l].kind != LayerKind::Dropout) got.push_back(r.trace.boundaries[l + 1].dims());
        chain_ok = chain_ok && got == chain && r.trace.boundaries.size() == (v == Variant::Basic ? 12u : 16u);
    }
    char worst_s[32];
    std::snprintf(worst_s, sizeof worst_s, "%.3g", worst);
    return {failures == 0 && worst <= kTanhTolerance && f32_ok && chain_ok,
            std::to_string(shapes) + " kernel shapes, " + std::to_string(failures) + " mismatches; tanh max err " +
                worst_s + " (tol 1e-12), f32 tanh " + (f32_ok ? "ok" : "FAILED") + "; shape chains " +
                (chain_ok ? "ok" : "FAILED")};
}

Outcome invariance() {
    std::mt19937_64 rng(31337);
    std::size_t violations = 0, duplicate_failures = 0;
    for (int s = 0; s < kInvarianceSets; ++s) {
        const std::size_t n = 50 + rng() % 351, dim = 2 + rng() % 31;
        const auto p = oracle::random_points(rng, n, dim, 2 + static_cast<int>(rng() % 5), oracle::Shape::Uniform);
        const auto base = loo_nn_predictions(to_set(p));
        const double base_err = loo_nn_error(to_set(p)).value;
        std::uniform_real_distribution<float> shift(-10.0f, 10.0f);
        for (float c : {0.5f, 3.0f}) {
            std::vector<float> t(dim);
            for (auto& x : t) x = shift(rng);
            auto q = p;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < dim; ++k) q.values[i * dim + k] = c * p.values[i * dim + k] + t[k];
            violations += loo_nn_predictions(to_set(q)) != base || loo_nn_error(to_set(q)).value != base_err;
        }
        const std::size_t i = rng() % n;
        auto d = p;
        d.values.insert(d.values.end(), p.row(i), p.row(i) + dim);
        d.labels.push_back(p.labels[i]);
        ++d.n;
        const auto preds = loo_nn_predictions(to_set(d));
        duplicate_failures += preds[i] != p.labels[i] || preds[n] != p.labels[i];
    }

    const auto root = oracle::scratch_dir("acceptance_dropout");
    const auto run = fixture::make_weights_run(root, 1, Variant::Dropout, {{"test", 80}}, 10000, 21);
    const auto report = profile_run(load_run_config(run.config), run.run_dir);
    std::size_t drop_layers = 0, drop_mismatch = 0;
    const auto layers = network_layers(Variant::Dropout);
    for (std::size_t l = 0; l < layers.size(); ++l)
        if (layers[l].kind == LayerKind::Dropout) {
            ++drop_layers;
            drop_mismatch += report.find(1, "test", l)->estimate.value != report.find(1, "test", l + 1)->estimate.value;
        }
    return {violations == 0 && duplicate_failures == 0 && drop_mismatch == 0 && drop_layers == 4,
            std::to_string(kInvarianceSets) + " sets x c in {0.5, 3.0}: " + std::to_string(violations) +
                " changed; duplicate law failures " + std::to_string(duplicate_failures) +
                "; eval dropout entry/exit mismatches " + std::to_string(drop_mismatch) + "/" +
                std::to_string(drop_layers)};
}

Outcome ingestion() {
    const auto root = oracle::scratch_dir("acceptance_ingest");
    const auto run = fixture::make_trace_run(root, 3, {{"train", 120}, {"test", 50}}, 77);
    RunConfig cfg;
    cfg.epochs = {1, 2, 3};
    cfg.splits = {"train", "test"};
    cfg.subset_size = 20;
    cfg.reduction = Reduction{2, 1};
    const auto report = profile_run(cfg, run.run_dir);

    // Completeness: every configured (epoch, split, boundary) exactly once.
    std::set<std::tuple<int, std::string, std::size_t>> seen;
    bool complete = report.end_to_end.empty();
    for (const auto& c : report.cells) complete = complete && seen.insert({c.epoch, c.split, c.boundary.index}).second;
    for (int e : cfg.epochs)
        for (const auto& s : cfg.splits)
            for (const auto& [id, pts] : run.dumps[static_cast<std::size_t>(e - 1)].at(s))
                complete = complete && seen.count({e, s, id.index}) == 1;
    complete = complete && seen.size() == report.cells.size();

    const bool equal = fixture::same_values(report, fixture::brute_force_report(run, cfg));
    return {complete && equal, std::to_string(report.cells.size()) + " cells, complete " + (complete ? "yes" : "no") +
                                   ", equal to brute force " + (equal ? "yes" : "no")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"oracle-equivalence", oracle_equivalence}, {"determinism", determinism},
        {"performance-budget", performance},       {"kernel-oracles", kernel_oracles},
        {"invariance-suite", invariance},          {"ingestion-path", ingestion},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s %-20s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
