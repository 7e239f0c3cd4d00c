#include "genreforge/manifest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "genreforge/errors.hpp"

namespace genreforge {

namespace {

const std::array<const char*, 8> kFmaGenres = {
    "Electronic", "Experimental", "Folk",          "Hip-hop",
    "Instrumental", "International", "Pop", "Rock",
};

const std::array<const char*, 10> kGtzanGenres = {
    "blues", "classical", "country", "disco",  "hiphop",
    "jazz",  "metal",     "pop",     "reggae", "rock",
};

template <std::size_t N>
bool contains(const std::array<const char*, N>& vocab, const std::string& label) {
    return std::any_of(vocab.begin(), vocab.end(),
                       [&](const char* g) { return label == g; });
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ParseError("manifest line " + std::to_string(line) + ": " + what);
}

}  // namespace

const char* split_name(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kVal: return "val";
        case Split::kTest: return "test";
    }
    throw std::logic_error("split_name: bad enum value");
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::kTrain;
    if (name == "val") return Split::kVal;
    if (name == "test") return Split::kTest;
    throw std::invalid_argument("unknown split '" + name + "'");
}

std::vector<ManifestEntry> parse_manifest(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;

    if (!std::getline(in, line)) throw ParseError("manifest is empty");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "path,label,split") {
        fail(line_no, "expected header 'path,label,split'");
    }

    std::vector<ManifestEntry> entries;
    std::set<std::string> seen_paths;
    bool fma_possible = true;
    bool gtzan_possible = true;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos
                                                       : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos ||
            line.find(',', c2 + 1) != std::string::npos) {
            fail(line_no, "expected 3 comma-separated fields");
        }
        ManifestEntry e;
        e.path = line.substr(0, c1);
        e.label = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string split_str = line.substr(c2 + 1);

        if (e.path.empty()) fail(line_no, "empty path");
        if (!seen_paths.insert(e.path).second) {
            fail(line_no, "duplicate path '" + e.path + "'");
        }

        const bool in_fma = contains(kFmaGenres, e.label);
        const bool in_gtzan = contains(kGtzanGenres, e.label);
        if (!in_fma && !in_gtzan) fail(line_no, "unknown label '" + e.label + "'");
        const bool next_fma = fma_possible && in_fma;
        const bool next_gtzan = gtzan_possible && in_gtzan;
        if (!next_fma && !next_gtzan) {
            fail(line_no, "label '" + e.label + "' mixes dataset vocabularies");
        }
        fma_possible = next_fma;
        gtzan_possible = next_gtzan;

        try {
            e.split = split_from_name(split_str);
        } catch (const std::invalid_argument& ex) {
            fail(line_no, ex.what());
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

std::vector<std::string> label_set(const std::vector<ManifestEntry>& entries) {
    std::set<std::string> labels;
    for (const auto& e : entries) labels.insert(e.label);
    return {labels.begin(), labels.end()};
}

void auto_split(std::vector<ManifestEntry>& entries, std::uint64_t seed) {
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        by_label[entries[i].label].push_back(i);
    }
    std::mt19937_64 rng(seed);
    for (auto& [label, idx] : by_label) {
        const std::size_t n = idx.size();
        if (n < 3) {
            throw std::invalid_argument("auto_split: label '" + label +
                                        "' has only " + std::to_string(n) +
                                        " tracks, need at least 3");
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t n_test = std::max<std::size_t>(1, n / 10);
        const std::size_t n_val = std::max<std::size_t>(1, n / 10);
        for (std::size_t k = 0; k < n; ++k) {
            Split s = Split::kTrain;
            if (k < n_test) {
                s = Split::kTest;
            } else if (k < n_test + n_val) {
                s = Split::kVal;
            }
            entries[idx[k]].split = s;
        }
    }
}

}  // namespace genreforge
