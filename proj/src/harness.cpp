#include "harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "error.hpp"
#include "parallel.hpp"
#include "seeding.hpp"

namespace fqa {

double median_of(std::vector<double> values) {
    if (values.empty()) throw UsageError("median of empty list");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(const Manifest& manifest,
                                                                  const SplitSpec& spec,
                                                                  int iteration) {
    if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0) {
        throw UsageError("train_fraction must lie in (0,1)");
    }
    std::mt19937_64 rng(mix_seed(spec.seed, static_cast<uint64_t>(iteration)));
    std::vector<size_t> train, test;

    if (spec.unit == SplitUnit::by_content) {
        std::vector<std::string> contents = manifest.content_ids();
        if (contents.size() < 2) {
            throw DataError("content-separated split needs at least 2 distinct content ids");
        }
        std::shuffle(contents.begin(), contents.end(), rng);
        const size_t train_contents = static_cast<size_t>(
            std::ceil(spec.train_fraction * static_cast<double>(contents.size())));
        if (train_contents == 0 || train_contents >= contents.size()) {
            throw DataError("split would leave one side empty (" +
                            std::to_string(contents.size()) + " contents at fraction " +
                            std::to_string(spec.train_fraction) + ")");
        }
        std::vector<std::string> train_ids(contents.begin(),
                                           contents.begin() + static_cast<long>(train_contents));
        auto is_train = [&](const std::string& id) {
            return std::find(train_ids.begin(), train_ids.end(), id) != train_ids.end();
        };
        for (size_t i = 0; i < manifest.samples.size(); ++i) {
            (is_train(manifest.samples[i].content_id) ? train : test).push_back(i);
        }
    } else {
        std::vector<size_t> order(manifest.samples.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        const size_t train_n = static_cast<size_t>(
            std::ceil(spec.train_fraction * static_cast<double>(order.size())));
        if (train_n == 0 || train_n >= order.size()) {
            throw DataError("split would leave one side empty");
        }
        train.assign(order.begin(), order.begin() + static_cast<long>(train_n));
        test.assign(order.begin() + static_cast<long>(train_n), order.end());
        std::sort(train.begin(), train.end());
        std::sort(test.begin(), test.end());
    }
    if (train.empty() || test.empty()) {
        throw DataError("split produced an empty side");
    }
    return {train, test};
}

std::pair<std::vector<Sample>, std::vector<Sample>> split(const Manifest& manifest,
                                                          const SplitSpec& spec, int iteration) {
    auto [ti, si] = split_indices(manifest, spec, iteration);
    std::vector<Sample> train, test;
    train.reserve(ti.size());
    test.reserve(si.size());
    for (size_t i : ti) train.push_back(manifest.samples[i]);
    for (size_t i : si) test.push_back(manifest.samples[i]);
    return {train, test};
}

ExtractedFeatures extract_manifest_features(const Manifest& manifest,
                                            const ExtractOptions& opts, int threads) {
    const size_t n = manifest.samples.size();
    if (n == 0) throw DataError("manifest has no samples");

    // Fail fast on unreadable images before any heavy work.
    std::vector<std::string> bad;
    std::vector<GrayImage> images;
    images.reserve(n);
    for (const auto& s : manifest.samples) {
        try {
            images.push_back(load_gray(s.image_path));
        } catch (const std::exception&) {
            bad.push_back(s.image_path);
            images.push_back(GrayImage(8, 8, std::vector<double>(64, 0.0)));  // placeholder
        }
    }
    if (!bad.empty()) {
        std::string msg = "cannot load " + std::to_string(bad.size()) + " image(s):";
        for (const auto& p : bad) msg += "\n  " + p;
        throw DataError(msg);
    }

    ExtractedFeatures out;
    out.rows.resize(n);
    std::vector<double> seconds(n, 0.0);
    parallel_for(n, threads, [&](size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        const FeatureVector f = extract(images[i], opts);
        const auto t1 = std::chrono::steady_clock::now();
        seconds[i] = std::chrono::duration<double>(t1 - t0).count();
        out.rows[i].path = manifest.samples[i].image_path;
        out.rows[i].features = f;
        out.rows[i].score = manifest.samples[i].subjective_score;
    });
    out.seconds_per_image =
        std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(n);
    return out;
}

namespace {

Eigen::MatrixXd rows_to_matrix(const std::vector<FeatureRow>& rows,
                               const std::vector<size_t>& idx) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(idx.size()), kFeatureCount);
    for (size_t r = 0; r < idx.size(); ++r) {
        for (int c = 0; c < kFeatureCount; ++c) {
            m(static_cast<Eigen::Index>(r), c) = rows[idx[r]].features[static_cast<size_t>(c)];
        }
    }
    return m;
}

Eigen::VectorXd scores_of(const Manifest& manifest, const std::vector<size_t>& idx) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(idx.size()));
    for (size_t r = 0; r < idx.size(); ++r) {
        v[static_cast<Eigen::Index>(r)] = manifest.samples[idx[r]].subjective_score;
    }
    return v;
}

EvalReport eval_split(const std::vector<FeatureRow>& rows, const Manifest& manifest,
                      const std::vector<size_t>& train_idx, const std::vector<size_t>& test_idx,
                      const FitOptions& fit_opts, int feature_index /* -1: all */) {
    Eigen::MatrixXd train_x = rows_to_matrix(rows, train_idx);
    Eigen::MatrixXd test_x = rows_to_matrix(rows, test_idx);
    if (feature_index >= 0) {
        train_x = train_x.col(feature_index).eval();
        test_x = test_x.col(feature_index).eval();
    }
    const GprModel model = GprModel::fit(train_x, scores_of(manifest, train_idx), fit_opts);
    std::vector<double> predicted(test_idx.size());
    for (size_t i = 0; i < test_idx.size(); ++i) {
        predicted[i] = model.predict(test_x.row(static_cast<Eigen::Index>(i)).transpose()).mean;
    }
    std::vector<double> subjective(test_idx.size());
    for (size_t i = 0; i < test_idx.size(); ++i) {
        subjective[i] = manifest.samples[test_idx[i]].subjective_score;
    }
    return evaluate_lenient(predicted, subjective);
}

}  // namespace

ExperimentResult run_experiment(const Manifest& manifest, const SplitSpec& spec,
                                const HarnessOptions& opts) {
    if (spec.iterations < 1) throw UsageError("iterations must be >= 1");
    const ExtractedFeatures feats =
        extract_manifest_features(manifest, opts.extract, opts.threads);

    ExperimentResult result;
    result.extract_seconds_per_image = feats.seconds_per_image;
    result.iterations.resize(static_cast<size_t>(spec.iterations));

    parallel_for(static_cast<size_t>(spec.iterations), opts.threads, [&](size_t it) {
        auto [train_idx, test_idx] = split_indices(manifest, spec, static_cast<int>(it));
        FitOptions fit_opts = opts.fit;
        fit_opts.seed = mix_seed(spec.seed, it, 1);
        IterationReport rep;
        rep.iteration = static_cast<int>(it);
        rep.train_size = train_idx.size();
        rep.test_size = test_idx.size();
        rep.report = eval_split(feats.rows, manifest, train_idx, test_idx, fit_opts, -1);
        result.iterations[it] = std::move(rep);
    });

    std::vector<double> s, k, p, r;
    for (const auto& it : result.iterations) {
        s.push_back(it.report.srocc);
        k.push_back(it.report.krocc);
        p.push_back(it.report.plcc);
        r.push_back(it.report.rmse);
        if (it.report.degenerate) ++result.degenerate_iterations;
    }
    result.median_srocc = median_of(s);
    result.median_krocc = median_of(k);
    result.median_plcc = median_of(p);
    result.median_rmse = median_of(r);
    return result;
}

EvalReport cross_database(const Manifest& train_manifest, const Manifest& test_manifest,
                          uint64_t seed, const HarnessOptions& opts) {
    const ExtractedFeatures train_feats =
        extract_manifest_features(train_manifest, opts.extract, opts.threads);
    const ExtractedFeatures test_feats =
        extract_manifest_features(test_manifest, opts.extract, opts.threads);

    std::vector<size_t> all_train(train_manifest.samples.size());
    std::iota(all_train.begin(), all_train.end(), 0);
    FitOptions fit_opts = opts.fit;
    fit_opts.seed = seed;
    const GprModel model = GprModel::fit(rows_to_matrix(train_feats.rows, all_train),
                                         scores_of(train_manifest, all_train), fit_opts);

    std::vector<double> predicted(test_manifest.samples.size());
    std::vector<double> subjective(test_manifest.samples.size());
    for (size_t i = 0; i < test_manifest.samples.size(); ++i) {
        Eigen::VectorXd x(kFeatureCount);
        for (int c = 0; c < kFeatureCount; ++c) {
            x[c] = test_feats.rows[i].features[static_cast<size_t>(c)];
        }
        predicted[i] = model.predict(x).mean;
        subjective[i] = test_manifest.samples[i].subjective_score;
    }
    return evaluate_lenient(predicted, subjective);
}

std::vector<AblationEntry> feature_ablation(const Manifest& manifest, const SplitSpec& spec,
                                            const HarnessOptions& opts) {
    if (spec.iterations < 1) throw UsageError("iterations must be >= 1");
    const ExtractedFeatures feats =
        extract_manifest_features(manifest, opts.extract, opts.threads);

    std::vector<AblationEntry> out(kFeatureCount);
    parallel_for(kFeatureCount, opts.threads, [&](size_t f) {
        std::vector<double> sroccs;
        bool degenerate = false;
        for (int it = 0; it < spec.iterations; ++it) {
            auto [train_idx, test_idx] = split_indices(manifest, spec, it);
            FitOptions fit_opts = opts.fit;
            fit_opts.seed = mix_seed(spec.seed, static_cast<uint64_t>(it), 2 + f);
            const EvalReport rep = eval_split(feats.rows, manifest, train_idx, test_idx,
                                              fit_opts, static_cast<int>(f));
            sroccs.push_back(rep.srocc);
            degenerate = degenerate || rep.degenerate;
        }
        out[f].feature_index = static_cast<int>(f) + 1;
        out[f].median_srocc = median_of(sroccs);
        out[f].degenerate = degenerate;
    });
    return out;
}

BenchmarkResult benchmark(const Manifest& manifest, int repeat, const ExtractOptions& opts) {
    if (repeat < 1) throw UsageError("repeat must be >= 1");
    BenchmarkResult res;
    res.repeat = repeat;

    std::vector<GrayImage> images;
    for (const auto& s : manifest.samples) images.push_back(load_gray(s.image_path));
    res.images = images.size();

    for (const auto& img : images) {
        for (int r = 0; r < repeat; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            volatile double sink = extract(img, opts)[0];  // keep the call alive
            (void)sink;
            const auto t1 = std::chrono::steady_clock::now();
            res.samples.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
    }
    res.mean = std::accumulate(res.samples.begin(), res.samples.end(), 0.0) /
               static_cast<double>(res.samples.size());
    res.median = median_of(res.samples);
    res.min = *std::min_element(res.samples.begin(), res.samples.end());
    double var = 0.0;
    for (double v : res.samples) var += (v - res.mean) * (v - res.mean);
    res.variance = var / static_cast<double>(res.samples.size());
    return res;
}

std::string ExperimentResult::to_json() const {
    nlohmann::json j;
    j["format"] = "freqiqa-experiment";
    j["version"] = 1;
    j["iterations"] = iterations.size();
    j["median"] = {{"srocc", median_srocc},
                   {"krocc", median_krocc},
                   {"plcc", median_plcc},
                   {"rmse", median_rmse}};
    j["extract_seconds_per_image"] = extract_seconds_per_image;
    j["degenerate_iterations"] = degenerate_iterations;
    nlohmann::json per = nlohmann::json::array();
    for (const auto& it : iterations) {
        per.push_back({{"iteration", it.iteration},
                       {"train_size", it.train_size},
                       {"test_size", it.test_size},
                       {"srocc", it.report.srocc},
                       {"krocc", it.report.krocc},
                       {"plcc", it.report.plcc},
                       {"rmse", it.report.rmse},
                       {"degenerate", it.report.degenerate}});
    }
    j["per_iteration"] = per;
    return j.dump();
}

std::string BenchmarkResult::to_json() const {
    nlohmann::json j;
    j["format"] = "freqiqa-benchmark";
    j["version"] = 1;
    j["images"] = images;
    j["repeat"] = repeat;
    j["seconds_per_image"] = {{"mean", mean},
                              {"median", median},
                              {"min", min},
                              {"variance", variance}};
    j["samples"] = samples;
    return j.dump();
}

}  // namespace fqa
