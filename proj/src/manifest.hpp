#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fqa {

enum class Distortion { jpeg, gblur, wn, multiple, pristine };

enum class ScorePolarity { higher_is_worse, higher_is_better };  // dmos | mos

struct Sample {
    std::string image_path;   // resolved against the manifest directory
    double subjective_score = 0.0;
    std::optional<Distortion> distortion;
    std::string content_id;   // reference/pristine image this sample derives from
};

struct Manifest {
    std::vector<Sample> samples;
    ScorePolarity polarity = ScorePolarity::higher_is_worse;

    std::vector<std::string> content_ids() const;  // distinct, in first-seen order
};

std::optional<Distortion> parse_distortion(const std::string& label);
std::string distortion_name(Distortion d);

// Reads the CSV manifest: optional leading `# polarity=dmos|mos` comment,
// header `path,score,distortion,content_id`, one sample per row. Relative
// image paths are resolved against the manifest's directory. A manifest
// with fewer than two distinct content ids parses fine; content-separated
// splitting rejects it later.
Manifest read_manifest(const std::string& path);

void write_manifest(const Manifest& m, const std::string& path);

}  // namespace fqa
