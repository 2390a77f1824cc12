#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sphm/batch.hpp"
#include "sphm/matrix.hpp"

namespace sphm {

/// Seeded synthetic hypersphere blobs: K class-center directions, each sample
/// the center rotated by a random angle <= angular_spread and scaled by
/// 1 +- radius_jitter.
struct SyntheticSpec {
    std::size_t k_classes = 2;
    std::size_t per_class = 10;
    std::size_t dim = 2;
    double angular_spread = 0.2;  // radians, must be in (0, pi/2)
    double radius_jitter = 0.0;   // in [0, 1)
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthBlobs {
    LabeledBatch batch;
    Matrix centers;       // k x dim unit rows
    std::string warning;  // non-empty when spread may overlap adjacent classes
};

/// Centers are uniformly spaced when dim == 2, otherwise sampled with a
/// guaranteed minimum pairwise separation where achievable; a too-large
/// spread yields a warning in the result, not an error.
SynthBlobs synth_blobs_full(const SyntheticSpec& spec);
LabeledBatch synth_blobs(const SyntheticSpec& spec);

/// Raw IDX payload: big-endian headers, one unsigned byte per pixel/label.
struct IdxData {
    std::uint32_t count = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols
    std::vector<std::uint8_t> labels;  // count

    friend bool operator==(const IdxData& a, const IdxData& b) = default;
};

/// Parses an IDX image/label file pair. Bad magic, count mismatches between
/// the two files, and truncation all fail with the offending byte offset.
IdxData read_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);
void write_idx(const IdxData& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

/// Pixels flattened row-major and scaled to (pixel - 127.5) / 128.
LabeledBatch idx_to_batch(const IdxData& data);
LabeledBatch load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path);

/// CSV with header "label,f0,f1,..."; 17 significant digits so a re-import
/// reproduces every value exactly.
void export_features(const Matrix& features, std::span<const int> labels,
                     const std::filesystem::path& path);
LabeledBatch import_features(const std::filesystem::path& path);

}  // namespace sphm
