#include "manifest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace fqa {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace

std::vector<std::string> Manifest::content_ids() const {
    std::vector<std::string> ids;
    for (const auto& s : samples) {
        if (std::find(ids.begin(), ids.end(), s.content_id) == ids.end()) {
            ids.push_back(s.content_id);
        }
    }
    return ids;
}

std::optional<Distortion> parse_distortion(const std::string& label) {
    if (label == "jpeg") return Distortion::jpeg;
    if (label == "gblur") return Distortion::gblur;
    if (label == "wn") return Distortion::wn;
    if (label == "multiple") return Distortion::multiple;
    if (label == "pristine") return Distortion::pristine;
    return std::nullopt;
}

std::string distortion_name(Distortion d) {
    switch (d) {
        case Distortion::jpeg: return "jpeg";
        case Distortion::gblur: return "gblur";
        case Distortion::wn: return "wn";
        case Distortion::multiple: return "multiple";
        case Distortion::pristine: return "pristine";
    }
    return "?";
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    Manifest m;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            auto eq = t.find("polarity=");
            if (eq != std::string::npos) {
                std::string pol = trim(t.substr(eq + 9));
                if (pol == "dmos") m.polarity = ScorePolarity::higher_is_worse;
                else if (pol == "mos") m.polarity = ScorePolarity::higher_is_better;
                else throw DataError("manifest " + path + " line " + std::to_string(lineno) +
                                     ": unknown polarity '" + pol + "'");
            }
            continue;
        }
        auto fields = split_csv(t);
        if (!header_seen) {
            if (fields.size() < 4 || fields[0] != "path" || fields[1] != "score" ||
                fields[2] != "distortion" || fields[3] != "content_id") {
                throw DataError("manifest " + path +
                                ": expected header 'path,score,distortion,content_id'");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() < 4) {
            throw DataError("manifest " + path + " line " + std::to_string(lineno) +
                            ": expected 4 columns, got " + std::to_string(fields.size()));
        }
        Sample s;
        std::filesystem::path p(fields[0]);
        s.image_path = p.is_absolute() ? p.string() : (base / p).string();
        try {
            size_t pos = 0;
            s.subjective_score = std::stod(fields[1], &pos);
            if (pos != fields[1].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw DataError("manifest " + path + " line " + std::to_string(lineno) +
                            ": non-numeric score '" + fields[1] + "'");
        }
        if (!std::isfinite(s.subjective_score)) {
            throw DataError("manifest " + path + " line " + std::to_string(lineno) +
                            ": score is not finite");
        }
        if (!fields[2].empty()) {
            s.distortion = parse_distortion(fields[2]);
            if (!s.distortion) {
                throw DataError("manifest " + path + " line " + std::to_string(lineno) +
                                ": unknown distortion '" + fields[2] + "'");
            }
        }
        s.content_id = fields[3];
        if (s.content_id.empty()) {
            throw DataError("manifest " + path + " line " + std::to_string(lineno) +
                            ": empty content_id");
        }
        m.samples.push_back(std::move(s));
    }
    if (!header_seen) throw DataError("manifest " + path + ": missing header row");
    return m;
}

void write_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << "# polarity="
        << (m.polarity == ScorePolarity::higher_is_worse ? "dmos" : "mos") << "\n";
    out << "path,score,distortion,content_id\n";
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    char buf[32];
    for (const auto& s : m.samples) {
        // Store paths relative to the manifest when they live beneath it.
        std::filesystem::path p(s.image_path);
        std::string rel = p.lexically_proximate(base).string();
        std::snprintf(buf, sizeof(buf), "%.17g", s.subjective_score);
        out << rel << ',' << buf << ','
            << (s.distortion ? distortion_name(*s.distortion) : "") << ',' << s.content_id
            << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace fqa
