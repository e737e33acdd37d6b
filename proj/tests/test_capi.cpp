#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqiqa.h"

#include "distort.hpp"
#include "features.hpp"
#include "image.hpp"
#include "manifest.hpp"
#include "test_util.hpp"

using nlohmann::json;

namespace {

struct Ladder {
    testutil::TempDir dir{"capi"};
    std::string manifest_path;

    explicit Ladder(int contents = 4, int size = 96) {
        std::vector<fqa::GrayImage> images;
        for (int i = 0; i < contents; ++i) {
            images.push_back(fqa::synth_content(size, size, 400 + static_cast<uint64_t>(i)));
        }
        std::vector<fqa::DistortionSpec> specs;
        for (double level : {0.5, 1.5, 3.0}) {
            specs.push_back({fqa::DistortKind::gblur, level, 2});
        }
        fqa::build_ladder(images, specs, dir.path().string());
        manifest_path = dir.file("manifest.csv");
    }
};

}  // namespace

TEST_CASE("version and default options") {
    CHECK(std::string(fqa_version()) == "1.0.0");
    fqa_extract_options e;
    fqa_extract_options_default(&e);
    CHECK(e.nf_gray_lf == 1000.0);
    CHECK(e.nf_mscn_lf == 100.0);
    CHECK(e.nf_gray_hf == 100.0);
    CHECK(e.nf_mscn_hf == 20.0);
    CHECK(e.zero_epsilon == 1e-6);
    fqa_train_options t;
    fqa_train_options_default(&t);
    CHECK(t.restarts == 5);
    CHECK(t.pinned_noise_variance < 0.0);
}

TEST_CASE("null arguments are usage errors with a message") {
    CHECK(fqa_image_load(nullptr, nullptr) == FQA_ERROR_USAGE);
    CHECK(std::strlen(fqa_last_error()) > 0);
}

TEST_CASE("missing files are data errors") {
    fqa_image* img = nullptr;
    CHECK(fqa_image_load("/nonexistent/nope.png", &img) == FQA_ERROR_DATA);
    CHECK(img == nullptr);
    CHECK(std::strlen(fqa_last_error()) > 0);
}

TEST_CASE("image create/save/load and accessors") {
    testutil::TempDir dir("capiimg");
    std::vector<double> data(16 * 16);
    for (size_t i = 0; i < data.size(); ++i) data[i] = static_cast<double>(i % 251);
    fqa_image* img = nullptr;
    REQUIRE(fqa_image_create(data.data(), 16, 16, &img) == FQA_OK);
    CHECK(fqa_image_width(img) == 16);
    CHECK(fqa_image_height(img) == 16);
    CHECK(fqa_image_data(img)[17] == data[17]);

    const std::string path = dir.file("img.png");
    CHECK(fqa_image_save_png(img, path.c_str()) == FQA_OK);
    fqa_image* back = nullptr;
    REQUIRE(fqa_image_load(path.c_str(), &back) == FQA_OK);
    CHECK(fqa_image_width(back) == 16);
    CHECK(std::memcmp(fqa_image_data(back), fqa_image_data(img),
                      sizeof(double) * data.size()) == 0);
    fqa_image_free(img);
    fqa_image_free(back);

    fqa_image* bad = nullptr;
    CHECK(fqa_image_create(data.data(), 4, 4, &bad) == FQA_ERROR_DATA);
}

TEST_CASE("C extraction equals the core extraction") {
    const fqa::GrayImage g = fqa::synth_content(96, 96, 9);
    const fqa::FeatureVector expect = fqa::extract(g);

    fqa_image* img = nullptr;
    REQUIRE(fqa_image_create(g.data().data(), g.width(), g.height(), &img) == FQA_OK);
    double feats[FQA_FEATURE_COUNT];
    REQUIRE(fqa_extract(img, nullptr, feats) == FQA_OK);
    for (int i = 0; i < FQA_FEATURE_COUNT; ++i) CHECK(feats[i] == expect[static_cast<size_t>(i)]);
    fqa_image_free(img);
}

TEST_CASE("distortion through the C surface is deterministic") {
    const fqa::GrayImage g = fqa::synth_content(64, 64, 10);
    fqa_image* img = nullptr;
    REQUIRE(fqa_image_create(g.data().data(), 64, 64, &img) == FQA_OK);
    fqa_image* a = nullptr;
    fqa_image* b = nullptr;
    REQUIRE(fqa_distort(img, "awgn", 8.0, 5, &a) == FQA_OK);
    REQUIRE(fqa_distort(img, "awgn", 8.0, 5, &b) == FQA_OK);
    CHECK(std::memcmp(fqa_image_data(a), fqa_image_data(b), sizeof(double) * 64 * 64) == 0);
    fqa_image* bad = nullptr;
    CHECK(fqa_distort(img, "vignette", 1.0, 0, &bad) == FQA_ERROR_USAGE);
    fqa_image_free(a);
    fqa_image_free(b);
    fqa_image_free(img);
}

TEST_CASE("manifest extraction, training, save/load, prediction round trip") {
    Ladder ladder;
    const std::string csv = ladder.dir.file("features.csv");
    REQUIRE(fqa_extract_manifest(ladder.manifest_path.c_str(), nullptr, 2, csv.c_str()) ==
            FQA_OK);

    fqa_train_options topts;
    fqa_train_options_default(&topts);
    topts.seed = 3;
    topts.restarts = 2;
    fqa_model* model = nullptr;
    REQUIRE(fqa_train_csv(csv.c_str(), &topts, &model) == FQA_OK);

    const std::string model_path = ladder.dir.file("model.json");
    REQUIRE(fqa_model_save(model, model_path.c_str()) == FQA_OK);
    fqa_model* loaded = nullptr;
    REQUIRE(fqa_model_load(model_path.c_str(), &loaded) == FQA_OK);

    const auto rows = fqa::read_feature_csv(csv);
    REQUIRE(!rows.empty());
    double m0 = 0, v0 = 0, m1 = 0, v1 = 0;
    REQUIRE(fqa_predict(model, rows[0].features.data(), &m0, &v0) == FQA_OK);
    REQUIRE(fqa_predict(loaded, rows[0].features.data(), &m1, &v1) == FQA_OK);
    CHECK(m0 == m1);  // save/load keeps predictions bit-identical
    CHECK(v0 == v1);
    CHECK(v0 >= 0.0);

    {
        char* out_csv = nullptr;
        REQUIRE(fqa_predict_csv(model, csv.c_str(), &out_csv) == FQA_OK);
        const std::string text(out_csv);
        CHECK(text.rfind("path,mean,variance\n", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') ==
              static_cast<long>(rows.size()) + 1);
        fqa_string_free(out_csv);
    }

    fqa_model_free(model);
    fqa_model_free(loaded);
}

TEST_CASE("foreign feature layout is a versioned load error") {
    Ladder ladder(3, 64);
    const std::string csv = ladder.dir.file("features.csv");
    REQUIRE(fqa_extract_manifest(ladder.manifest_path.c_str(), nullptr, 1, csv.c_str()) ==
            FQA_OK);
    fqa_train_options topts;
    fqa_train_options_default(&topts);
    topts.restarts = 1;
    fqa_model* model = nullptr;
    REQUIRE(fqa_train_csv(csv.c_str(), &topts, &model) == FQA_OK);
    const std::string path = ladder.dir.file("model.json");
    REQUIRE(fqa_model_save(model, path.c_str()) == FQA_OK);
    fqa_model_free(model);

    // Rewrite the layout tag as a future version.
    std::ifstream in(path);
    json j;
    in >> j;
    in.close();
    j["feature_layout"] = "freqiqa-f24-v9";
    std::ofstream out(path);
    out << j.dump();
    out.close();

    fqa_model* stale = nullptr;
    CHECK(fqa_model_load(path.c_str(), &stale) == FQA_ERROR_DATA);
    CHECK(std::string(fqa_last_error()).find("freqiqa-f24-v9") != std::string::npos);
}

TEST_CASE("experiment, ablation, benchmark and synth JSON surfaces") {
    Ladder ladder(5, 96);

    json options = {{"iterations", 2},
                    {"seed", 4},
                    {"threads", 2},
                    {"train", {{"restarts", 1}}}};
    char* result = nullptr;
    REQUIRE(fqa_run_experiment(ladder.manifest_path.c_str(), options.dump().c_str(),
                               &result) == FQA_OK);
    json rj = json::parse(result);
    CHECK(rj.at("format") == "freqiqa-experiment");
    CHECK(rj.at("per_iteration").size() == 2);
    fqa_string_free(result);

    char* xdb = nullptr;
    json cv_options = {{"seed", 1}, {"train", {{"restarts", 1}}}};
    REQUIRE(fqa_cross_database(ladder.manifest_path.c_str(), ladder.manifest_path.c_str(),
                               cv_options.dump().c_str(), &xdb) == FQA_OK);
    CHECK(json::parse(xdb).at("format") == "freqiqa-evalreport");
    fqa_string_free(xdb);

    char* bench = nullptr;
    REQUIRE(fqa_benchmark(ladder.manifest_path.c_str(), 1, nullptr, &bench) == FQA_OK);
    CHECK(json::parse(bench).at("format") == "freqiqa-benchmark");
    fqa_string_free(bench);

    testutil::TempDir synth_dir("capisynth");
    json sopts = {{"out_dir", synth_dir.path().string()},
                  {"kind", "gblur"},
                  {"contents", 2},
                  {"size", 64},
                  {"levels", {0.5, 2.0}},
                  {"seed", 11}};
    char* synth = nullptr;
    REQUIRE(fqa_synth_ladder(sopts.dump().c_str(), &synth) == FQA_OK);
    const json sj = json::parse(synth);
    CHECK(sj.at("samples") == 4);
    const fqa::Manifest m = fqa::read_manifest(sj.at("manifest").get<std::string>());
    CHECK(m.samples.size() == 4);
    fqa_string_free(synth);

    json bad_options = {{"split_unit", "nonsense"}};
    char* oops = nullptr;
    CHECK(fqa_run_experiment(ladder.manifest_path.c_str(), bad_options.dump().c_str(),
                             &oops) == FQA_ERROR_USAGE);
}

TEST_CASE("evaluate_model reports metrics for a trained model") {
    Ladder ladder(4, 96);
    const std::string csv = ladder.dir.file("features.csv");
    REQUIRE(fqa_extract_manifest(ladder.manifest_path.c_str(), nullptr, 2, csv.c_str()) ==
            FQA_OK);
    fqa_train_options topts;
    fqa_train_options_default(&topts);
    topts.restarts = 2;
    fqa_model* model = nullptr;
    REQUIRE(fqa_train_csv(csv.c_str(), &topts, &model) == FQA_OK);
    char* report = nullptr;
    REQUIRE(fqa_evaluate_model(model, ladder.manifest_path.c_str(), nullptr, &report) ==
            FQA_OK);
    const json j = json::parse(report);
    CHECK(j.at("n") == 12);
    CHECK(j.at("srocc").get<double>() > 0.5);  // trained on itself, should rank well
    fqa_string_free(report);
    fqa_model_free(model);
}
