// Command-line front end over the freqiqa C API.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
// stdout carries machine-readable results only; diagnostics go to stderr.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freqiqa.h"

using nlohmann::json;

namespace {

int fail(fqa_status st) {
    std::cerr << "error: " << fqa_last_error() << "\n";
    return static_cast<int>(st);
}

struct StringOut {
    char* s = nullptr;
    ~StringOut() { fqa_string_free(s); }
};

struct ImageHandle {
    fqa_image* img = nullptr;
    ~ImageHandle() { fqa_image_free(img); }
};

struct ModelHandle {
    fqa_model* model = nullptr;
    ~ModelHandle() { fqa_model_free(model); }
};

std::vector<double> parse_csv_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

// Shared tunables surfaced on several subcommands.
struct ExtractFlags {
    std::string nf;
    double epsilon = -1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--nf", nf,
                        "normalization factors gLF,mLF,gHF,mHF (default 1000,100,100,20)");
        cmd->add_option("--epsilon", epsilon, "zero-detection threshold (default 1e-6)");
    }
    fqa_extract_options resolve() const {
        fqa_extract_options opts;
        fqa_extract_options_default(&opts);
        if (!nf.empty()) {
            const auto v = parse_csv_doubles(nf);
            if (v.size() != 4) throw CLI::ValidationError("--nf needs 4 comma-separated values");
            opts.nf_gray_lf = v[0];
            opts.nf_mscn_lf = v[1];
            opts.nf_gray_hf = v[2];
            opts.nf_mscn_hf = v[3];
        }
        if (epsilon >= 0.0) opts.zero_epsilon = epsilon;
        return opts;
    }
    void to_json(json& j) const {
        json e = json::object();
        if (!nf.empty()) {
            const auto v = parse_csv_doubles(nf);
            if (v.size() != 4) throw CLI::ValidationError("--nf needs 4 comma-separated values");
            e["nf"] = v;
        }
        if (epsilon >= 0.0) e["zero_epsilon"] = epsilon;
        if (!e.empty()) j["extract"] = e;
    }
};

struct TrainFlags {
    uint64_t seed = 0;
    int restarts = -1;
    int max_iterations = -1;
    double pin_noise = -1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--seed", seed, "RNG seed for hyperparameter restarts");
        cmd->add_option("--restarts", restarts, "evidence-maximization restarts (default 5)");
        cmd->add_option("--max-iters", max_iterations, "optimizer iterations per restart");
        cmd->add_option("--pin-noise", pin_noise, "pin the GPR noise variance to this value");
    }
    fqa_train_options resolve() const {
        fqa_train_options opts;
        fqa_train_options_default(&opts);
        opts.seed = seed;
        if (restarts > 0) opts.restarts = restarts;
        if (max_iterations > 0) opts.max_iterations = max_iterations;
        opts.pinned_noise_variance = pin_noise;
        return opts;
    }
    void to_json(json& j) const {
        json t = json::object();
        if (restarts > 0) t["restarts"] = restarts;
        if (max_iterations > 0) t["max_iterations"] = max_iterations;
        if (pin_noise >= 0.0) t["pinned_noise_variance"] = pin_noise;
        if (!t.empty()) j["train"] = t;
    }
};

void emit(const std::string& out_path, const std::string& payload) {
    if (out_path.empty()) {
        std::cout << payload;
        if (payload.empty() || payload.back() != '\n') std::cout << "\n";
        return;
    }
    std::ofstream out(out_path);
    out << payload;
    if (payload.empty() || payload.back() != '\n') out << "\n";
    if (!out) throw CLI::ValidationError("cannot write " + out_path);
}

std::string report_as(const std::string& report_json, const std::string& format) {
    if (format == "json") return report_json;
    const json j = json::parse(report_json);
    std::ostringstream kv;
    if (j.contains("median")) {  // experiment document
        for (const auto& [key, value] : j.at("median").items()) {
            kv << "median_" << key << "=" << value.dump() << "\n";
        }
        kv << "iterations=" << j.at("iterations").dump() << "\n";
        kv << "extract_seconds_per_image=" << j.at("extract_seconds_per_image").dump() << "\n";
    } else {
        for (const char* key : {"srocc", "krocc", "plcc", "rmse", "n", "degenerate"}) {
            if (j.contains(key)) kv << key << "=" << j.at(key).dump() << "\n";
        }
    }
    return kv.str();
}

// One roll-up of the single-image extraction used by extract/predict.
fqa_status extract_one(const std::string& image, const fqa_extract_options& opts,
                       double* features) {
    ImageHandle h;
    fqa_status st = fqa_image_load(image.c_str(), &h.img);
    if (st != FQA_OK) return st;
    return fqa_extract(h.img, &opts, features);
}

std::string feature_csv_row(const std::string& path, const double* f,
                            const std::string& score) {
    std::ostringstream row;
    row << path;
    char buf[32];
    for (int i = 0; i < FQA_FEATURE_COUNT; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", f[i]);
        row << ',' << buf;
    }
    row << ',' << score << '\n';
    return row.str();
}

std::string feature_csv_header() {
    std::ostringstream h;
    h << "path";
    for (int i = 1; i <= FQA_FEATURE_COUNT; ++i) h << ",f" << i;
    h << ",score\n";
    return h.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"freqiqa: blind image quality assessment toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(fqa_version()));

    // ---- extract ----
    auto* extract = app.add_subcommand("extract", "extract feature vectors");
    std::string ex_manifest, ex_image, ex_out, ex_dump_mscn, ex_dump_block_out;
    int ex_threads = 0, ex_block_row = 0, ex_block_col = 0;
    bool ex_block_from_mscn = false, ex_dump_block = false;
    extract->add_option("--manifest", ex_manifest, "manifest CSV of images to extract");
    extract->add_option("--image", ex_image, "single image to extract");
    extract->add_option("--out", ex_out, "output feature CSV (stdout for single image)");
    extract->add_option("--threads", ex_threads, "worker threads (0 = all cores)");
    ExtractFlags ex_flags;
    ex_flags.attach(extract);
    extract->add_option("--dump-mscn", ex_dump_mscn, "write the MSCN field as an ASCII grid");
    extract->add_flag("--dump-block", ex_dump_block, "dump one block's shifted magnitude grid");
    extract->add_option("--dump-block-row", ex_block_row, "block row for --dump-block");
    extract->add_option("--dump-block-col", ex_block_col, "block column for --dump-block");
    extract->add_flag("--dump-block-from-mscn", ex_block_from_mscn,
                      "dump the MSCN-field spectrum instead of the gray one");
    extract->add_option("--dump-block-out", ex_dump_block_out,
                        "output path for --dump-block (default block.txt)");

    // ---- train ----
    auto* train = app.add_subcommand("train", "fit a GPR model on a feature CSV");
    std::string tr_features, tr_out;
    TrainFlags tr_flags;
    train->add_option("--features", tr_features, "feature CSV with score column")->required();
    train->add_option("--out", tr_out, "model file to write")->required();
    tr_flags.attach(train);

    // ---- predict ----
    auto* predict = app.add_subcommand("predict", "predict scores with a trained model");
    std::string pr_model, pr_image, pr_features;
    ExtractFlags pr_flags;
    predict->add_option("--model", pr_model, "model file")->required();
    predict->add_option("--image", pr_image, "image to score");
    predict->add_option("--features", pr_features, "feature CSV to score");
    pr_flags.attach(predict);

    // ---- evaluate ----
    auto* evaluate = app.add_subcommand(
        "evaluate", "evaluate a model on a manifest, or run the split protocol");
    std::string ev_manifest, ev_model, ev_out, ev_format = "json";
    int ev_iterations = 1000, ev_threads = 0;
    double ev_fraction = 0.8;
    uint64_t ev_seed = 0;
    bool ev_by_sample = false;
    ExtractFlags ev_eflags;
    TrainFlags ev_tflags;
    evaluate->add_option("--manifest", ev_manifest, "manifest CSV")->required();
    evaluate->add_option("--model", ev_model, "trained model (skip the split protocol)");
    evaluate->add_option("--iterations", ev_iterations, "split iterations (default 1000)");
    evaluate->add_option("--train-fraction", ev_fraction, "train fraction (default 0.8)");
    evaluate->add_option("--seed", ev_seed, "split/restart seed");
    evaluate->add_flag("--by-sample", ev_by_sample,
                       "split samples instead of contents (protocol comparison)");
    evaluate->add_option("--threads", ev_threads, "worker threads (0 = all cores)");
    evaluate->add_option("--out", ev_out, "write the result document here instead of stdout");
    evaluate->add_option("--format", ev_format, "json|kv (default json)")
        ->check(CLI::IsMember({"json", "kv"}));
    ev_eflags.attach(evaluate);
    ev_tflags.attach(evaluate);

    // ---- crossval ----
    auto* crossval = app.add_subcommand("crossval", "train on one manifest, test on another");
    std::string cv_train, cv_test, cv_out, cv_format = "json";
    uint64_t cv_seed = 0;
    int cv_threads = 0;
    ExtractFlags cv_eflags;
    TrainFlags cv_tflags;
    crossval->add_option("--train-manifest", cv_train, "training manifest")->required();
    crossval->add_option("--test-manifest", cv_test, "test manifest")->required();
    crossval->add_option("--seed", cv_seed, "restart seed");
    crossval->add_option("--threads", cv_threads, "worker threads");
    crossval->add_option("--out", cv_out, "output path (default stdout)");
    crossval->add_option("--format", cv_format, "json|kv")->check(CLI::IsMember({"json", "kv"}));
    cv_eflags.attach(crossval);
    cv_tflags.attach(crossval);

    // ---- ablate ----
    auto* ablate = app.add_subcommand("ablate", "per-feature split-protocol medians");
    std::string ab_manifest, ab_out;
    int ab_iterations = 100, ab_threads = 0;
    double ab_fraction = 0.8;
    uint64_t ab_seed = 0;
    ExtractFlags ab_eflags;
    TrainFlags ab_tflags;
    ablate->add_option("--manifest", ab_manifest, "manifest CSV")->required();
    ablate->add_option("--iterations", ab_iterations, "split iterations (default 100)");
    ablate->add_option("--train-fraction", ab_fraction, "train fraction");
    ablate->add_option("--seed", ab_seed, "seed");
    ablate->add_option("--threads", ab_threads, "worker threads");
    ablate->add_option("--out", ab_out, "output path (default stdout)");
    ab_eflags.attach(ablate);
    ab_tflags.attach(ablate);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic distortion ladder");
    std::string sy_out_dir, sy_kind = "gblur", sy_levels, sy_source;
    int sy_contents = 20, sy_size = 192;
    uint64_t sy_seed = 0;
    synth->add_option("--out", sy_out_dir, "output directory")->required();
    synth->add_option("--kind", sy_kind, "gblur|awgn|blocky|mixed")
        ->check(CLI::IsMember({"gblur", "awgn", "blocky", "mixed"}));
    synth->add_option("--levels", sy_levels, "comma-separated distortion levels");
    synth->add_option("--contents", sy_contents, "number of synthetic contents (default 20)");
    synth->add_option("--size", sy_size, "content size in pixels (default 192)");
    synth->add_option("--source-manifest", sy_source, "draw contents from this manifest");
    synth->add_option("--seed", sy_seed, "generator seed");

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "time feature extraction");
    std::string be_manifest, be_image, be_out;
    int be_repeat = 3;
    ExtractFlags be_flags;
    bench->add_option("--manifest", be_manifest, "manifest of images to time");
    bench->add_option("--image", be_image, "single image to time");
    bench->add_option("--repeat", be_repeat, "repetitions per image (default 3)");
    bench->add_option("--out", be_out, "output path (default stdout)");
    be_flags.attach(bench);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*extract) {
            if (ex_manifest.empty() == ex_image.empty()) {
                std::cerr << "error: extract needs exactly one of --manifest or --image\n";
                return 1;
            }
            const fqa_extract_options opts = ex_flags.resolve();
            if (!ex_manifest.empty()) {
                if (ex_out.empty()) {
                    std::cerr << "error: --manifest extraction requires --out\n";
                    return 1;
                }
                const fqa_status st = fqa_extract_manifest(ex_manifest.c_str(), &opts,
                                                           ex_threads, ex_out.c_str());
                if (st != FQA_OK) return fail(st);
                return 0;
            }
            ImageHandle img;
            fqa_status st = fqa_image_load(ex_image.c_str(), &img.img);
            if (st != FQA_OK) return fail(st);
            if (!ex_dump_mscn.empty()) {
                st = fqa_dump_mscn(img.img, ex_dump_mscn.c_str());
                if (st != FQA_OK) return fail(st);
            }
            if (ex_dump_block) {
                const std::string out_path =
                    ex_dump_block_out.empty() ? "block.txt" : ex_dump_block_out;
                st = fqa_dump_block_spectrum(img.img, ex_block_row, ex_block_col,
                                             ex_block_from_mscn ? 1 : 0, out_path.c_str());
                if (st != FQA_OK) return fail(st);
            }
            double features[FQA_FEATURE_COUNT];
            st = fqa_extract(img.img, &opts, features);
            if (st != FQA_OK) return fail(st);
            emit(ex_out, feature_csv_header() + feature_csv_row(ex_image, features, ""));
            return 0;
        }

        if (*train) {
            const fqa_train_options opts = tr_flags.resolve();
            ModelHandle model;
            fqa_status st = fqa_train_csv(tr_features.c_str(), &opts, &model.model);
            if (st != FQA_OK) return fail(st);
            st = fqa_model_save(model.model, tr_out.c_str());
            if (st != FQA_OK) return fail(st);
            json j = {{"format", "freqiqa-train"}, {"version", 1}, {"model", tr_out}};
            std::cout << j.dump() << "\n";
            return 0;
        }

        if (*predict) {
            if (pr_image.empty() == pr_features.empty()) {
                std::cerr << "error: predict needs exactly one of --image or --features\n";
                return 1;
            }
            ModelHandle model;
            fqa_status st = fqa_model_load(pr_model.c_str(), &model.model);
            if (st != FQA_OK) return fail(st);
            if (!pr_features.empty()) {
                StringOut out;
                st = fqa_predict_csv(model.model, pr_features.c_str(), &out.s);
                if (st != FQA_OK) return fail(st);
                std::cout << out.s;
                return 0;
            }
            const fqa_extract_options opts = pr_flags.resolve();
            double features[FQA_FEATURE_COUNT];
            st = extract_one(pr_image, opts, features);
            if (st != FQA_OK) return fail(st);
            double mean = 0.0, variance = 0.0;
            st = fqa_predict(model.model, features, &mean, &variance);
            if (st != FQA_OK) return fail(st);
            std::printf("path,mean,variance\n%s,%.17g,%.17g\n", pr_image.c_str(), mean,
                        variance);
            return 0;
        }

        if (*evaluate) {
            json options;
            ev_eflags.to_json(options);
            ev_tflags.to_json(options);
            options["threads"] = ev_threads;
            if (!ev_model.empty()) {
                ModelHandle model;
                fqa_status st = fqa_model_load(ev_model.c_str(), &model.model);
                if (st != FQA_OK) return fail(st);
                StringOut out;
                st = fqa_evaluate_model(model.model, ev_manifest.c_str(),
                                        options.dump().c_str(), &out.s);
                if (st != FQA_OK) return fail(st);
                emit(ev_out, report_as(out.s, ev_format));
                return 0;
            }
            options["iterations"] = ev_iterations;
            options["train_fraction"] = ev_fraction;
            options["seed"] = ev_seed;
            options["split_unit"] = ev_by_sample ? "by_sample" : "by_content";
            StringOut out;
            const fqa_status st =
                fqa_run_experiment(ev_manifest.c_str(), options.dump().c_str(), &out.s);
            if (st != FQA_OK) return fail(st);
            emit(ev_out, report_as(out.s, ev_format));
            return 0;
        }

        if (*crossval) {
            json options;
            cv_eflags.to_json(options);
            cv_tflags.to_json(options);
            options["threads"] = cv_threads;
            options["seed"] = cv_seed;
            StringOut out;
            const fqa_status st = fqa_cross_database(cv_train.c_str(), cv_test.c_str(),
                                                     options.dump().c_str(), &out.s);
            if (st != FQA_OK) return fail(st);
            emit(cv_out, report_as(out.s, cv_format));
            return 0;
        }

        if (*ablate) {
            json options;
            ab_eflags.to_json(options);
            ab_tflags.to_json(options);
            options["threads"] = ab_threads;
            options["iterations"] = ab_iterations;
            options["train_fraction"] = ab_fraction;
            options["seed"] = ab_seed;
            StringOut out;
            const fqa_status st =
                fqa_feature_ablation(ab_manifest.c_str(), options.dump().c_str(), &out.s);
            if (st != FQA_OK) return fail(st);
            emit(ab_out, out.s);
            return 0;
        }

        if (*synth) {
            json options = {{"out_dir", sy_out_dir},
                            {"kind", sy_kind},
                            {"contents", sy_contents},
                            {"size", sy_size},
                            {"seed", sy_seed}};
            if (!sy_levels.empty()) options["levels"] = parse_csv_doubles(sy_levels);
            if (!sy_source.empty()) options["source_manifest"] = sy_source;
            StringOut out;
            const fqa_status st = fqa_synth_ladder(options.dump().c_str(), &out.s);
            if (st != FQA_OK) return fail(st);
            std::cout << out.s << "\n";
            return 0;
        }

        if (*bench) {
            if (be_manifest.empty() == be_image.empty()) {
                std::cerr << "error: bench needs exactly one of --manifest or --image\n";
                return 1;
            }
            std::string manifest_path = be_manifest;
            std::filesystem::path tmp;
            if (!be_image.empty()) {
                tmp = std::filesystem::temp_directory_path() /
                      ("freqiqa_bench_" + std::to_string(::getpid()) + ".csv");
                std::ofstream m(tmp);
                m << "path,score,distortion,content_id\n"
                  << std::filesystem::absolute(be_image).string() << ",0,,c0\n";
                manifest_path = tmp.string();
            }
            json options;
            be_flags.to_json(options);
            StringOut out;
            const fqa_status st = fqa_benchmark(manifest_path.c_str(), be_repeat,
                                                options.dump().c_str(), &out.s);
            if (!tmp.empty()) std::filesystem::remove(tmp);
            if (st != FQA_OK) return fail(st);
            emit(be_out, out.s);
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
