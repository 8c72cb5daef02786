#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dsa/tensor.hpp"

namespace dsa {

struct VideoSample {
    std::string id;
    Tensor features; // L×d_f
    std::vector<int> labels;
};

// Ordered class-name table; ids follow file order, 0..C−1.
class ClassMap {
  public:
    ClassMap() = default;
    explicit ClassMap(std::vector<std::string> names);

    static ClassMap load(const std::string& path);
    void save(const std::string& path) const;

    std::size_t size() const { return names_.size(); }
    const std::string& name(int id) const;
    int id(const std::string& name) const; // throws on unknown names
    const std::vector<std::string>& names() const { return names_; }

  private:
    std::vector<std::string> names_;
};

// Binary frame-feature format: magic "DSAF", u32 version, u64 L, u64 d_f,
// then L·d_f little-endian 32-bit reals row-major. Values widen to 64-bit
// in memory.
Tensor load_features(const std::string& path);
Tensor load_features(std::istream& in, const std::string& origin);
void save_features(const std::string& path, const Tensor& features);
void save_features(std::ostream& out, const Tensor& features);

// One class name per line; trailing newline and CRLF are tolerated.
std::vector<int> load_labels(const std::string& path, const ClassMap& map);
std::vector<int> load_labels(std::istream& in, const ClassMap& map,
                             const std::string& origin);
void save_labels(const std::string& path, const std::vector<int>& labels,
                 const ClassMap& map);

struct SyntheticSpec {
    std::size_t num_classes = 4;
    std::size_t segments_per_video = 8;
    std::size_t min_duration = 15;
    std::size_t max_duration = 35;
    std::size_t feature_dim = 32;
    double noise_sigma = 0.1;
    std::uint64_t seed = 7;

    void validate() const;
};

// Seeded segment sampler: labels follow a uniform transition rule over the
// other classes; per-frame features are the class prototype (a fixed random
// unit vector) plus Gaussian noise.
std::vector<VideoSample> generate_synthetic(const SyntheticSpec& spec,
                                            std::size_t n_videos);

// Class names used for generated data: action_0 .. action_{C-1}.
ClassMap synthetic_class_map(std::size_t num_classes);

struct Dataset {
    std::vector<VideoSample> videos;
    ClassMap classes;
};

// Directory layout: features/<id>.dsaf, groundTruth/<id>.txt, mapping.txt,
// splits/<split>.txt (one video id per line).
Dataset load_dataset(const std::string& root, const std::string& split_file);
void write_dataset(const std::string& root,
                   const std::vector<VideoSample>& videos, const ClassMap& map,
                   const std::string& split_name);

} // namespace dsa
