#include "freqiqa.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockfreq.hpp"
#include "distort.hpp"
#include "error.hpp"
#include "features.hpp"
#include "gpr.hpp"
#include "harness.hpp"
#include "image.hpp"
#include "manifest.hpp"
#include "metrics.hpp"
#include "mscn.hpp"
#include "seeding.hpp"

using nlohmann::json;

struct fqa_image {
    fqa::GrayImage img;
};

struct fqa_model {
    fqa::GprModel model;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
fqa_status wrap(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return FQA_OK;
    } catch (const fqa::UsageError& e) {
        g_last_error = e.what();
        return FQA_ERROR_USAGE;
    } catch (const fqa::DataError& e) {
        g_last_error = e.what();
        return FQA_ERROR_DATA;
    } catch (const fqa::NumericError& e) {
        g_last_error = e.what();
        return FQA_ERROR_NUMERIC;
    } catch (const json::exception& e) {
        g_last_error = std::string("malformed JSON options: ") + e.what();
        return FQA_ERROR_USAGE;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FQA_ERROR_DATA;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw fqa::UsageError(std::string("null argument: ") + what);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

fqa::ExtractOptions to_extract_options(const fqa_extract_options* opts) {
    fqa::ExtractOptions out;
    if (opts) {
        out.nf.g_lf = opts->nf_gray_lf;
        out.nf.m_lf = opts->nf_mscn_lf;
        out.nf.g_hf = opts->nf_gray_hf;
        out.nf.m_hf = opts->nf_mscn_hf;
        out.zero_epsilon = opts->zero_epsilon;
    }
    return out;
}

fqa::FitOptions to_fit_options(const fqa_train_options* opts) {
    fqa::FitOptions out;
    if (opts) {
        out.seed = opts->seed;
        out.restarts = opts->restarts;
        out.max_iterations = opts->max_iterations;
        if (opts->pinned_noise_variance >= 0.0) {
            out.pinned_noise_variance = opts->pinned_noise_variance;
        }
    }
    return out;
}

json parse_options(const char* options_json) {
    if (!options_json || !*options_json) return json::object();
    return json::parse(options_json);
}

fqa::ExtractOptions extract_from_json(const json& j) {
    fqa::ExtractOptions opts;
    if (!j.contains("extract")) return opts;
    const json& e = j.at("extract");
    if (e.contains("nf")) {
        const auto nf = e.at("nf").get<std::vector<double>>();
        if (nf.size() != 4) throw fqa::UsageError("extract.nf must hold 4 values");
        opts.nf.g_lf = nf[0];
        opts.nf.m_lf = nf[1];
        opts.nf.g_hf = nf[2];
        opts.nf.m_hf = nf[3];
    }
    if (e.contains("zero_epsilon")) opts.zero_epsilon = e.at("zero_epsilon").get<double>();
    return opts;
}

fqa::FitOptions fit_from_json(const json& j) {
    fqa::FitOptions opts;
    if (!j.contains("train")) return opts;
    const json& t = j.at("train");
    if (t.contains("restarts")) opts.restarts = t.at("restarts").get<int>();
    if (t.contains("max_iterations")) opts.max_iterations = t.at("max_iterations").get<int>();
    if (t.contains("pinned_noise_variance")) {
        const double v = t.at("pinned_noise_variance").get<double>();
        if (v >= 0.0) opts.pinned_noise_variance = v;
    }
    return opts;
}

fqa::SplitSpec split_from_json(const json& j) {
    fqa::SplitSpec spec;
    if (j.contains("train_fraction")) spec.train_fraction = j.at("train_fraction").get<double>();
    if (j.contains("iterations")) spec.iterations = j.at("iterations").get<int>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<uint64_t>();
    if (j.contains("split_unit")) {
        const std::string unit = j.at("split_unit").get<std::string>();
        if (unit == "by_content") spec.unit = fqa::SplitUnit::by_content;
        else if (unit == "by_sample") spec.unit = fqa::SplitUnit::by_sample;
        else throw fqa::UsageError("split_unit must be by_content or by_sample");
    }
    return spec;
}

fqa::HarnessOptions harness_from_json(const json& j) {
    fqa::HarnessOptions opts;
    opts.extract = extract_from_json(j);
    opts.fit = fit_from_json(j);
    if (j.contains("threads")) opts.threads = j.at("threads").get<int>();
    return opts;
}

}  // namespace

extern "C" {

const char* fqa_version(void) { return "1.0.0"; }

const char* fqa_last_error(void) { return g_last_error.c_str(); }

fqa_status fqa_image_load(const char* path, fqa_image** out) {
    return wrap([&] {
        require(path && out, "fqa_image_load");
        *out = new fqa_image{fqa::load_gray(path)};
    });
}

fqa_status fqa_image_create(const double* data, int32_t width, int32_t height,
                            fqa_image** out) {
    return wrap([&] {
        require(data && out, "fqa_image_create");
        if (width <= 0 || height <= 0) throw fqa::UsageError("non-positive image dimensions");
        std::vector<double> buf(data, data + static_cast<size_t>(width) * height);
        *out = new fqa_image{fqa::GrayImage(width, height, std::move(buf))};
    });
}

fqa_status fqa_image_save_png(const fqa_image* img, const char* path) {
    return wrap([&] {
        require(img && path, "fqa_image_save_png");
        fqa::save_png(img->img, path);
    });
}

void fqa_image_free(fqa_image* img) { delete img; }

int32_t fqa_image_width(const fqa_image* img) { return img ? img->img.width() : 0; }
int32_t fqa_image_height(const fqa_image* img) { return img ? img->img.height() : 0; }
const double* fqa_image_data(const fqa_image* img) {
    return img ? img->img.data().data() : nullptr;
}

void fqa_extract_options_default(fqa_extract_options* opts) {
    if (!opts) return;
    const fqa::ExtractOptions d;
    opts->nf_gray_lf = d.nf.g_lf;
    opts->nf_mscn_lf = d.nf.m_lf;
    opts->nf_gray_hf = d.nf.g_hf;
    opts->nf_mscn_hf = d.nf.m_hf;
    opts->zero_epsilon = d.zero_epsilon;
}

fqa_status fqa_extract(const fqa_image* img, const fqa_extract_options* opts,
                       double* features) {
    return wrap([&] {
        require(img && features, "fqa_extract");
        const fqa::FeatureVector f = fqa::extract(img->img, to_extract_options(opts));
        std::memcpy(features, f.data(), sizeof(double) * fqa::kFeatureCount);
    });
}

fqa_status fqa_extract_manifest(const char* manifest_path, const fqa_extract_options* opts,
                                int32_t threads, const char* out_csv_path) {
    return wrap([&] {
        require(manifest_path && out_csv_path, "fqa_extract_manifest");
        const fqa::Manifest m = fqa::read_manifest(manifest_path);
        const fqa::ExtractedFeatures feats =
            fqa::extract_manifest_features(m, to_extract_options(opts), threads);
        fqa::write_feature_csv(feats.rows, out_csv_path);
    });
}

fqa_status fqa_dump_mscn(const fqa_image* img, const char* out_path) {
    return wrap([&] {
        require(img && out_path, "fqa_dump_mscn");
        const fqa::MscnField field = fqa::mscn(img->img);
        fqa::write_float_grid(field.values, field.width, field.height, out_path);
    });
}

fqa_status fqa_dump_block_spectrum(const fqa_image* img, int32_t block_row, int32_t block_col,
                                   int32_t from_mscn, const char* out_path) {
    return wrap([&] {
        require(img && out_path, "fqa_dump_block_spectrum");
        std::vector<fqa::BlockSpectrum> spectra;
        if (from_mscn) {
            spectra = fqa::block_spectra(fqa::mscn(img->img));
        } else {
            spectra = fqa::block_spectra(img->img);
        }
        const int block_cols = img->img.width() / fqa::kBlockSize;
        const int block_rows = img->img.height() / fqa::kBlockSize;
        if (block_row < 0 || block_row >= block_rows || block_col < 0 ||
            block_col >= block_cols) {
            throw fqa::UsageError("block coordinates out of range");
        }
        const auto& spec = spectra[static_cast<size_t>(block_row) * block_cols + block_col];
        fqa::write_float_grid(std::vector<double>(spec.mag.begin(), spec.mag.end()), 8, 8,
                              out_path);
    });
}

fqa_status fqa_distort(const fqa_image* img, const char* kind, double level, uint64_t seed,
                       fqa_image** out) {
    return wrap([&] {
        require(img && kind && out, "fqa_distort");
        fqa::DistortionSpec spec;
        const std::string k = kind;
        if (k == "gblur") spec.kind = fqa::DistortKind::gblur;
        else if (k == "awgn") spec.kind = fqa::DistortKind::awgn;
        else if (k == "blocky") spec.kind = fqa::DistortKind::blocky;
        else throw fqa::UsageError("unknown distortion kind: " + k);
        spec.level = level;
        spec.seed = seed;
        *out = new fqa_image{fqa::apply_distortion(img->img, spec)};
    });
}

void fqa_train_options_default(fqa_train_options* opts) {
    if (!opts) return;
    const fqa::FitOptions d;
    opts->seed = d.seed;
    opts->restarts = d.restarts;
    opts->max_iterations = d.max_iterations;
    opts->pinned_noise_variance = -1.0;
}

fqa_status fqa_train_csv(const char* features_csv_path, const fqa_train_options* opts,
                         fqa_model** out) {
    return wrap([&] {
        require(features_csv_path && out, "fqa_train_csv");
        const auto rows = fqa::read_feature_csv(features_csv_path);
        if (rows.empty()) throw fqa::DataError("feature CSV has no rows");
        Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), fqa::kFeatureCount);
        Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
        for (size_t i = 0; i < rows.size(); ++i) {
            if (!rows[i].score) {
                throw fqa::DataError("feature CSV row " + std::to_string(i + 1) +
                                     " (" + rows[i].path + ") has no score");
            }
            for (int c = 0; c < fqa::kFeatureCount; ++c) {
                x(static_cast<Eigen::Index>(i), c) = rows[i].features[static_cast<size_t>(c)];
            }
            y[static_cast<Eigen::Index>(i)] = *rows[i].score;
        }
        *out = new fqa_model{fqa::GprModel::fit(x, y, to_fit_options(opts))};
    });
}

fqa_status fqa_model_save(const fqa_model* model, const char* path) {
    return wrap([&] {
        require(model && path, "fqa_model_save");
        model->model.save(path);
    });
}

fqa_status fqa_model_load(const char* path, fqa_model** out) {
    return wrap([&] {
        require(path && out, "fqa_model_load");
        fqa::GprModel m = fqa::GprModel::load(path);
        if (m.feature_layout() != fqa::kFeatureLayout) {
            throw fqa::DataError("model feature layout '" + m.feature_layout() +
                                 "' is incompatible with '" + fqa::kFeatureLayout + "'");
        }
        *out = new fqa_model{std::move(m)};
    });
}

void fqa_model_free(fqa_model* model) { delete model; }

fqa_status fqa_predict(const fqa_model* model, const double* features, double* mean,
                       double* variance) {
    return wrap([&] {
        require(model && features && mean, "fqa_predict");
        Eigen::VectorXd x(model->model.dimension());
        if (x.size() != fqa::kFeatureCount) {
            throw fqa::DataError("model dimension is not the 24-feature layout");
        }
        for (int c = 0; c < fqa::kFeatureCount; ++c) x[c] = features[c];
        const fqa::Prediction p = model->model.predict(x);
        *mean = p.mean;
        if (variance) *variance = p.variance;
    });
}

fqa_status fqa_predict_csv(const fqa_model* model, const char* features_csv_path,
                           char** out_csv) {
    return wrap([&] {
        require(model && features_csv_path && out_csv, "fqa_predict_csv");
        const auto rows = fqa::read_feature_csv(features_csv_path);
        if (rows.empty()) throw fqa::DataError("feature CSV has no rows");
        std::string out = "path,mean,variance\n";
        char buf[64];
        for (const auto& row : rows) {
            Eigen::VectorXd x(fqa::kFeatureCount);
            for (int c = 0; c < fqa::kFeatureCount; ++c) {
                x[c] = row.features[static_cast<size_t>(c)];
            }
            const fqa::Prediction p = model->model.predict(x);
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", p.mean, p.variance);
            out += row.path + buf;
        }
        *out_csv = dup_string(out);
    });
}

fqa_status fqa_evaluate_model(const fqa_model* model, const char* manifest_path,
                              const char* options_json, char** report_json) {
    return wrap([&] {
        require(model && manifest_path && report_json, "fqa_evaluate_model");
        const json j = parse_options(options_json);
        const fqa::Manifest m = fqa::read_manifest(manifest_path);
        const int threads = j.contains("threads") ? j.at("threads").get<int>() : 0;
        const fqa::ExtractedFeatures feats =
            fqa::extract_manifest_features(m, extract_from_json(j), threads);
        std::vector<double> predicted(m.samples.size()), subjective(m.samples.size());
        for (size_t i = 0; i < m.samples.size(); ++i) {
            Eigen::VectorXd x(fqa::kFeatureCount);
            for (int c = 0; c < fqa::kFeatureCount; ++c) {
                x[c] = feats.rows[i].features[static_cast<size_t>(c)];
            }
            predicted[i] = model->model.predict(x).mean;
            subjective[i] = m.samples[i].subjective_score;
        }
        const fqa::EvalReport rep = fqa::evaluate_lenient(predicted, subjective);
        *report_json = dup_string(rep.to_json());
    });
}

fqa_status fqa_run_experiment(const char* manifest_path, const char* options_json,
                              char** result_json) {
    return wrap([&] {
        require(manifest_path && result_json, "fqa_run_experiment");
        const json j = parse_options(options_json);
        const fqa::Manifest m = fqa::read_manifest(manifest_path);
        const fqa::ExperimentResult res =
            fqa::run_experiment(m, split_from_json(j), harness_from_json(j));
        *result_json = dup_string(res.to_json());
    });
}

fqa_status fqa_cross_database(const char* train_manifest_path, const char* test_manifest_path,
                              const char* options_json, char** report_json) {
    return wrap([&] {
        require(train_manifest_path && test_manifest_path && report_json, "fqa_cross_database");
        const json j = parse_options(options_json);
        const uint64_t seed = j.contains("seed") ? j.at("seed").get<uint64_t>() : 0;
        const fqa::EvalReport rep =
            fqa::cross_database(fqa::read_manifest(train_manifest_path),
                                fqa::read_manifest(test_manifest_path), seed,
                                harness_from_json(j));
        *report_json = dup_string(rep.to_json());
    });
}

fqa_status fqa_feature_ablation(const char* manifest_path, const char* options_json,
                                char** result_json) {
    return wrap([&] {
        require(manifest_path && result_json, "fqa_feature_ablation");
        const json j = parse_options(options_json);
        const fqa::Manifest m = fqa::read_manifest(manifest_path);
        const auto entries =
            fqa::feature_ablation(m, split_from_json(j), harness_from_json(j));
        json out;
        out["format"] = "freqiqa-ablation";
        out["version"] = 1;
        json arr = json::array();
        for (const auto& e : entries) {
            arr.push_back({{"feature", e.feature_index},
                           {"median_srocc", e.median_srocc},
                           {"degenerate", e.degenerate}});
        }
        out["entries"] = arr;
        *result_json = dup_string(out.dump());
    });
}

fqa_status fqa_benchmark(const char* manifest_path, int32_t repeat, const char* options_json,
                         char** result_json) {
    return wrap([&] {
        require(manifest_path && result_json, "fqa_benchmark");
        const json j = parse_options(options_json);
        const fqa::Manifest m = fqa::read_manifest(manifest_path);
        const fqa::BenchmarkResult res = fqa::benchmark(m, repeat, extract_from_json(j));
        *result_json = dup_string(res.to_json());
    });
}

fqa_status fqa_synth_ladder(const char* options_json, char** result_json) {
    return wrap([&] {
        require(result_json, "fqa_synth_ladder");
        const json j = parse_options(options_json);
        if (!j.contains("out_dir")) throw fqa::UsageError("synth options need out_dir");
        const std::string out_dir = j.at("out_dir").get<std::string>();
        const std::string kind = j.contains("kind") ? j.at("kind").get<std::string>() : "gblur";
        const uint64_t seed = j.contains("seed") ? j.at("seed").get<uint64_t>() : 0;
        const int size = j.contains("size") ? j.at("size").get<int>() : 192;

        std::vector<fqa::GrayImage> contents;
        if (j.contains("source_manifest")) {
            const fqa::Manifest src =
                fqa::read_manifest(j.at("source_manifest").get<std::string>());
            for (const auto& s : src.samples) contents.push_back(fqa::load_gray(s.image_path));
        } else {
            const int n = j.contains("contents") ? j.at("contents").get<int>() : 20;
            if (n < 1) throw fqa::UsageError("contents must be >= 1");
            for (int i = 0; i < n; ++i) {
                contents.push_back(
                    fqa::synth_content(size, size, fqa::mix_seed(seed, static_cast<uint64_t>(i))));
            }
        }

        fqa::Manifest manifest;
        if (kind == "mixed") {
            auto levels_of = [&](const char* key, std::vector<double> fallback) {
                return j.contains(key) ? j.at(key).get<std::vector<double>>() : fallback;
            };
            manifest = fqa::build_mixed_ladder(contents,
                                               levels_of("blur_levels", {1.0, 2.5}),
                                               levels_of("blocky_levels", {2.0, 6.0}),
                                               levels_of("awgn_levels", {5.0, 15.0}),
                                               seed, out_dir);
        } else {
            fqa::DistortKind dk;
            if (kind == "gblur") dk = fqa::DistortKind::gblur;
            else if (kind == "awgn") dk = fqa::DistortKind::awgn;
            else if (kind == "blocky") dk = fqa::DistortKind::blocky;
            else throw fqa::UsageError("unknown ladder kind: " + kind);
            std::vector<double> levels = {0.5, 1.0, 2.0, 3.0, 5.0};
            if (j.contains("levels")) levels = j.at("levels").get<std::vector<double>>();
            std::vector<fqa::DistortionSpec> specs;
            for (double level : levels) specs.push_back({dk, level, seed});
            manifest = fqa::build_ladder(contents, specs, out_dir);
        }

        json out;
        out["format"] = "freqiqa-synth";
        out["version"] = 1;
        out["manifest"] = (std::filesystem::path(out_dir) / "manifest.csv").string();
        out["samples"] = manifest.samples.size();
        *result_json = dup_string(out.dump());
    });
}

void fqa_string_free(char* s) { std::free(s); }

}  // extern "C"
