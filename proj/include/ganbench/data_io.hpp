#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ganbench/tensor.hpp"

namespace ganbench {

// Images as [N x C x H x W]; labels[i] in [0, num_classes). Parsers emit
// raw 0..255 pixel values; normalize() maps them into [-1, 1], the range
// every model in the zoo consumes.
struct LabeledDataset {
    std::string name;
    Tensor images;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
};

// Throws if the dataset violates the normalized-range contract.
void require_normalized(const LabeledDataset& ds);

// IDX pair (big-endian headers; image magic 0x00000803, label magic
// 0x00000801). Pixels stay 0..255.
LabeledDataset parse_idx(const std::vector<std::uint8_t>& image_bytes,
                         const std::vector<std::uint8_t>& label_bytes, std::size_t num_classes = 10);

// One CIFAR-10 binary batch: 3073-byte records, label byte then 3072
// channel-planar RGB bytes. Pixels stay 0..255.
LabeledDataset parse_cifar10(const std::vector<std::uint8_t>& bytes);

// pixel / 127.5 - 1, elementwise; inputs must lie in [0, 255].
Tensor normalize(const Tensor& pixels);
LabeledDataset normalize(const LabeledDataset& raw);
// round((v + 1) * 127.5), clamped to one byte.
std::uint8_t denormalize_value(double v);

struct SplitSpec {
    std::uint64_t seed = 0;
    std::size_t test_count = 0;
    std::size_t train_count = 0;     // 0: everything left after the test side
    std::size_t per_class_cap = 0;   // 0: uncapped; otherwise max train rows per class
};

// Seed-deterministic disjoint split. The test side is drawn first from a
// shuffled index list; the train side honors per_class_cap.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, const SplitSpec& spec);

// n points from a ring of `modes` Gaussians (radius 2, sigma 0.05),
// scaled by 1/2.5 and clamped so every point lies in [-1, 1]^2. Points
// are stored as [n x 1 x 1 x 2]; the label is the mode index.
LabeledDataset make_toy_mixture(std::size_t n, std::size_t modes, std::uint64_t seed);
// Centers of the scaled mixture, as a [modes x 2] tensor.
Tensor toy_mode_centers(std::size_t modes);

// Writes sample_NNNN.pgm (C = 1) or .ppm (C = 3) files, denormalizing
// values from (-1, 1) back to bytes. Returns the paths written.
std::vector<std::filesystem::path> export_images(const Tensor& images, const std::filesystem::path& dir);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const std::filesystem::path& path);

// Checksum manifest: one "<sha256 hex><two spaces><filename>" line per
// file (the sha256sum convention).
struct ManifestEntry {
    std::string sha256;
    std::string filename;
};
std::vector<ManifestEntry> parse_manifest(const std::string& text);
std::string render_manifest(const std::vector<ManifestEntry>& entries);

}  // namespace ganbench
