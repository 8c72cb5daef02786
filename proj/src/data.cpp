#include "dsa/data.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

namespace dsa {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'D', 'S', 'A', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class Reader {
  public:
    Reader(std::istream& in, std::string origin)
        : in_(in), origin_(std::move(origin)) {}

    std::size_t offset() const { return offset_; }

    void bytes(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError(origin_ + ": truncated at byte " +
                              std::to_string(offset_));
        }
        offset_ += n;
    }

    std::uint32_t u32() {
        unsigned char b[4];
        bytes(reinterpret_cast<char*>(b), 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    std::uint64_t u64() {
        unsigned char b[8];
        bytes(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    const std::string& origin() const { return origin_; }

  private:
    std::istream& in_;
    std::string origin_;
    std::size_t offset_ = 0;
};

std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    // a single trailing newline produces no extra entry; interior blank
    // lines stay and are rejected by the callers
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

} // namespace

ClassMap::ClassMap(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        for (std::size_t j = i + 1; j < names_.size(); ++j) {
            if (names_[i] == names_[j]) {
                throw FormatError("duplicate class name: " + names_[i]);
            }
        }
        if (names_[i].empty()) {
            throw FormatError("empty class name at line " +
                              std::to_string(i + 1));
        }
    }
}

ClassMap ClassMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open class map: " + path);
    std::vector<std::string> lines = read_lines(in);
    if (lines.empty()) throw FormatError("empty class map: " + path);
    return ClassMap(std::move(lines));
}

void ClassMap::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write class map: " + path);
    for (const std::string& n : names_) out << n << '\n';
}

const std::string& ClassMap::name(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= names_.size()) {
        throw ContractError("class id " + std::to_string(id) +
                            " out of range [0, " +
                            std::to_string(names_.size()) + ")");
    }
    return names_[static_cast<std::size_t>(id)];
}

int ClassMap::id(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return static_cast<int>(i);
    }
    throw FormatError("unknown class name: " + name);
}

Tensor load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open feature file: " + path);
    return load_features(in, path);
}

Tensor load_features(std::istream& in, const std::string& origin) {
    Reader r(in, origin);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError(origin + ": bad magic at byte 0");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw FormatError(origin + ": unsupported version " +
                          std::to_string(version) + " at byte 4");
    }
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (rows == 0 || cols == 0) {
        throw FormatError(origin + ": empty feature matrix declared at byte 8");
    }
    std::vector<double> values(rows * cols);
    for (double& v : values) v = static_cast<double>(r.f32());
    return Tensor::from({rows, cols}, std::move(values));
}

void save_features(const std::string& path, const Tensor& features) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write feature file: " + path);
    save_features(out, features);
}

void save_features(std::ostream& out, const Tensor& features) {
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, features.rows());
    put_u64(out, features.cols());
    for (double v : features.values()) put_f32(out, static_cast<float>(v));
    if (!out) throw FormatError("feature write failed");
}

std::vector<int> load_labels(const std::string& path, const ClassMap& map) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open label file: " + path);
    return load_labels(in, map, path);
}

std::vector<int> load_labels(std::istream& in, const ClassMap& map,
                             const std::string& origin) {
    const std::vector<std::string> lines = read_lines(in);
    if (lines.empty()) throw FormatError(origin + ": no labels");
    std::vector<int> out;
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            out.push_back(map.id(lines[i]));
        } catch (const FormatError&) {
            throw FormatError(origin + ": unknown class name '" + lines[i] +
                              "' at line " + std::to_string(i + 1));
        }
    }
    return out;
}

void save_labels(const std::string& path, const std::vector<int>& labels,
                 const ClassMap& map) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write label file: " + path);
    for (int y : labels) out << map.name(y) << '\n';
}

void SyntheticSpec::validate() const {
    if (num_classes < 2) throw ConfigError("synthetic data needs >= 2 classes");
    if (segments_per_video < 1) {
        throw ConfigError("segments_per_video must be >= 1");
    }
    if (min_duration < 1 || max_duration < min_duration) {
        throw ConfigError("invalid duration range [" +
                          std::to_string(min_duration) + ", " +
                          std::to_string(max_duration) + "]");
    }
    if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
}

ClassMap synthetic_class_map(std::size_t num_classes) {
    std::vector<std::string> names;
    names.reserve(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        names.push_back("action_" + std::to_string(c));
    }
    return ClassMap(std::move(names));
}

std::vector<VideoSample> generate_synthetic(const SyntheticSpec& spec,
                                            std::size_t n_videos) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // fixed unit prototypes, one per class
    std::vector<std::vector<double>> protos(spec.num_classes);
    for (auto& p : protos) {
        p.resize(spec.feature_dim);
        double norm = 0.0;
        for (double& v : p) {
            v = gauss(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : p) v /= norm;
    }
    for (std::size_t i = 0; i < protos.size(); ++i) {
        for (std::size_t j = i + 1; j < protos.size(); ++j) {
            double d = 0.0;
            for (std::size_t k = 0; k < spec.feature_dim; ++k) {
                const double diff = protos[i][k] - protos[j][k];
                d += diff * diff;
            }
            if (std::sqrt(d) <= 0.1) {
                throw ContractError(
                    "synthetic prototypes too close; choose another seed");
            }
        }
    }

    std::uniform_int_distribution<std::size_t> duration(spec.min_duration,
                                                        spec.max_duration);
    std::uniform_int_distribution<std::size_t> any_class(0,
                                                         spec.num_classes - 1);
    std::uniform_int_distribution<std::size_t> other_class(
        0, spec.num_classes - 2);

    std::vector<VideoSample> videos;
    videos.reserve(n_videos);
    for (std::size_t v = 0; v < n_videos; ++v) {
        std::vector<int> labels;
        std::size_t current = any_class(rng);
        for (std::size_t s = 0; s < spec.segments_per_video; ++s) {
            if (s > 0) {
                // uniform over the other classes
                std::size_t next = other_class(rng);
                if (next >= current) ++next;
                current = next;
            }
            const std::size_t len = duration(rng);
            labels.insert(labels.end(), len, static_cast<int>(current));
        }
        std::vector<double> feats(labels.size() * spec.feature_dim);
        for (std::size_t t = 0; t < labels.size(); ++t) {
            const auto& proto = protos[static_cast<std::size_t>(labels[t])];
            for (std::size_t k = 0; k < spec.feature_dim; ++k) {
                feats[t * spec.feature_dim + k] =
                    proto[k] + spec.noise_sigma * gauss(rng);
            }
        }
        VideoSample sample;
        char id[32];
        std::snprintf(id, sizeof(id), "synth_%03zu", v);
        sample.id = id;
        sample.features = Tensor::from({labels.size(), spec.feature_dim},
                                       std::move(feats));
        sample.labels = std::move(labels);
        videos.push_back(std::move(sample));
    }
    return videos;
}

Dataset load_dataset(const std::string& root, const std::string& split_file) {
    const fs::path base(root);
    Dataset ds;
    ds.classes = ClassMap::load((base / "mapping.txt").string());

    std::ifstream split(split_file);
    if (!split) throw FormatError("cannot open split file: " + split_file);
    const std::vector<std::string> ids = read_lines(split);
    if (ids.empty()) throw FormatError("empty split file: " + split_file);

    for (const std::string& id : ids) {
        if (id.empty()) {
            throw FormatError(split_file + ": blank video id");
        }
        VideoSample sample;
        sample.id = id;
        sample.features =
            load_features((base / "features" / (id + ".dsaf")).string());
        sample.labels = load_labels(
            (base / "groundTruth" / (id + ".txt")).string(), ds.classes);
        if (sample.features.rows() != sample.labels.size()) {
            throw FormatError("video " + id + ": " +
                              std::to_string(sample.features.rows()) +
                              " feature rows vs " +
                              std::to_string(sample.labels.size()) +
                              " labels");
        }
        ds.videos.push_back(std::move(sample));
    }
    return ds;
}

void write_dataset(const std::string& root,
                   const std::vector<VideoSample>& videos, const ClassMap& map,
                   const std::string& split_name) {
    const fs::path base(root);
    fs::create_directories(base / "features");
    fs::create_directories(base / "groundTruth");
    fs::create_directories(base / "splits");
    map.save((base / "mapping.txt").string());
    std::ofstream split(base / "splits" / (split_name + ".txt"));
    if (!split) {
        throw FormatError("cannot write split file under " + root);
    }
    for (const VideoSample& v : videos) {
        save_features((base / "features" / (v.id + ".dsaf")).string(),
                      v.features);
        save_labels((base / "groundTruth" / (v.id + ".txt")).string(),
                    v.labels, map);
        split << v.id << '\n';
    }
}

} // namespace dsa
