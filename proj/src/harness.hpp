#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "features.hpp"
#include "gpr.hpp"
#include "manifest.hpp"
#include "metrics.hpp"

namespace fqa {

enum class SplitUnit { by_content, by_sample };

struct SplitSpec {
    double train_fraction = 0.8;
    int iterations = 1000;
    uint64_t seed = 0;
    SplitUnit unit = SplitUnit::by_content;
};

// Deterministic train/test partition for one iteration. by_content shuffles
// content ids and sends the first ceil(fraction * |contents|) contents'
// samples to the training side; no content appears on both sides.
std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(const Manifest& manifest,
                                                                  const SplitSpec& spec,
                                                                  int iteration);
std::pair<std::vector<Sample>, std::vector<Sample>> split(const Manifest& manifest,
                                                          const SplitSpec& spec, int iteration);

// Features for every manifest sample, in manifest order. Unreadable images
// fail the whole call up front, listing every bad path. Also reports the
// mean wall-clock extraction seconds per image.
struct ExtractedFeatures {
    std::vector<FeatureRow> rows;
    double seconds_per_image = 0.0;
};
ExtractedFeatures extract_manifest_features(const Manifest& manifest,
                                            const ExtractOptions& opts, int threads);

struct IterationReport {
    int iteration = 0;
    size_t train_size = 0;
    size_t test_size = 0;
    EvalReport report;
};

struct ExperimentResult {
    std::vector<IterationReport> iterations;
    double median_srocc = 0.0;
    double median_krocc = 0.0;
    double median_plcc = 0.0;
    double median_rmse = 0.0;
    double extract_seconds_per_image = 0.0;
    size_t degenerate_iterations = 0;

    std::string to_json() const;
};

struct HarnessOptions {
    ExtractOptions extract;
    FitOptions fit;
    int threads = 0;  // <=0: all cores
};

// The randomized-split protocol: features extracted once, then per
// iteration split / fit / predict / evaluate; medians over iterations.
ExperimentResult run_experiment(const Manifest& manifest, const SplitSpec& spec,
                                const HarnessOptions& opts = {});

// Fit on every train-manifest sample, evaluate on every test-manifest
// sample; score scales reconcile only through the logistic remap.
EvalReport cross_database(const Manifest& train_manifest, const Manifest& test_manifest,
                          uint64_t seed, const HarnessOptions& opts = {});

struct AblationEntry {
    int feature_index = 0;  // 1-based, f1..f24
    double median_srocc = 0.0;
    bool degenerate = false;
};

// Re-runs the split protocol once per feature, using only that feature.
std::vector<AblationEntry> feature_ablation(const Manifest& manifest, const SplitSpec& spec,
                                            const HarnessOptions& opts = {});

struct BenchmarkResult {
    size_t images = 0;
    int repeat = 0;
    std::vector<double> samples;  // seconds per extract() call
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double variance = 0.0;

    std::string to_json() const;
};

// Wall-clock of extract() per image, single-threaded.
BenchmarkResult benchmark(const Manifest& manifest, int repeat,
                          const ExtractOptions& opts = {});

double median_of(std::vector<double> values);

}  // namespace fqa
