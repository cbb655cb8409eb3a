#include "ganbench/data_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ganbench/errors.hpp"
#include "ganbench/rng.hpp"

namespace ganbench {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
constexpr std::size_t kCifarRecord = 3073;

class ByteReader {
  public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint32_t u32_be(const char* what) {
        if (pos_ + 4 > bytes_.size()) {
            throw FormatError(std::string("truncated while reading ") + what);
        }
        std::uint32_t v = (std::uint32_t(bytes_[pos_]) << 24) | (std::uint32_t(bytes_[pos_ + 1]) << 16) |
                          (std::uint32_t(bytes_[pos_ + 2]) << 8) | std::uint32_t(bytes_[pos_ + 3]);
        pos_ += 4;
        return v;
    }

    const std::uint8_t* take(std::size_t n, const char* what) {
        if (pos_ + n > bytes_.size()) {
            throw FormatError(std::string("truncated while reading ") + what);
        }
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }

  private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

void require_normalized(const LabeledDataset& ds) {
    if (ds.images.rank() != 4) {
        throw ContractError("dataset images must be [N x C x H x W], got " + shape_str(ds.images.shape()));
    }
    if (ds.images.dim(0) != ds.labels.size()) {
        throw ContractError("dataset holds " + std::to_string(ds.images.dim(0)) + " images but " +
                            std::to_string(ds.labels.size()) + " labels");
    }
    for (std::size_t y : ds.labels) {
        if (y >= ds.num_classes) throw ContractError("label " + std::to_string(y) + " out of range");
    }
    const double* p = ds.images.data();
    for (std::size_t i = 0; i < ds.images.numel(); ++i) {
        if (p[i] < -1.0 || p[i] > 1.0) {
            throw ContractError("dataset value " + std::to_string(p[i]) + " outside [-1, 1]");
        }
    }
}

LabeledDataset parse_idx(const std::vector<std::uint8_t>& image_bytes,
                         const std::vector<std::uint8_t>& label_bytes, std::size_t num_classes) {
    ByteReader ir(image_bytes);
    if (ir.u32_be("image magic") != kIdxImageMagic) {
        throw FormatError("bad IDX image magic");
    }
    const std::uint32_t n = ir.u32_be("image count");
    const std::uint32_t h = ir.u32_be("image rows");
    const std::uint32_t w = ir.u32_be("image cols");
    const std::uint8_t* pixels = ir.take(std::size_t(n) * h * w, "image pixels");

    ByteReader lr(label_bytes);
    if (lr.u32_be("label magic") != kIdxLabelMagic) {
        throw FormatError("bad IDX label magic");
    }
    const std::uint32_t nl = lr.u32_be("label count");
    if (nl != n) {
        throw ConsistencyError("IDX pair declares " + std::to_string(n) + " images but " + std::to_string(nl) +
                               " labels");
    }
    const std::uint8_t* labels = lr.take(nl, "labels");

    LabeledDataset ds;
    ds.name = "idx";
    ds.num_classes = num_classes;
    std::vector<double> img(std::size_t(n) * h * w);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = double(pixels[i]);
    ds.images = Tensor::from(Shape{n, 1, h, w}, std::move(img));
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= num_classes) {
            throw ConsistencyError("IDX label " + std::to_string(int(labels[i])) + " out of range for " +
                                   std::to_string(num_classes) + " classes");
        }
        ds.labels[i] = labels[i];
    }
    return ds;
}

LabeledDataset parse_cifar10(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() % kCifarRecord != 0) {
        throw FormatError("CIFAR-10 batch length " + std::to_string(bytes.size()) +
                          " is not a multiple of 3073");
    }
    const std::size_t n = bytes.size() / kCifarRecord;
    LabeledDataset ds;
    ds.name = "cifar10";
    ds.num_classes = 10;
    ds.labels.resize(n);
    std::vector<double> img(n * 3072);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* rec = bytes.data() + i * kCifarRecord;
        if (rec[0] >= 10) {
            throw ConsistencyError("CIFAR-10 label " + std::to_string(int(rec[0])) + " out of range");
        }
        ds.labels[i] = rec[0];
        for (std::size_t j = 0; j < 3072; ++j) img[i * 3072 + j] = double(rec[1 + j]);
    }
    ds.images = Tensor::from(Shape{n, 3, 32, 32}, std::move(img));
    return ds;
}

Tensor normalize(const Tensor& pixels) {
    std::vector<double> out(pixels.numel());
    const double* p = pixels.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (p[i] < 0.0 || p[i] > 255.0) {
            throw ContractError("pixel value " + std::to_string(p[i]) + " outside [0, 255]");
        }
        out[i] = p[i] / 127.5 - 1.0;
    }
    return Tensor::from(pixels.shape(), std::move(out));
}

LabeledDataset normalize(const LabeledDataset& raw) {
    LabeledDataset ds = raw;
    ds.images = normalize(raw.images);
    return ds;
}

std::uint8_t denormalize_value(double v) {
    const double b = std::llround((v + 1.0) * 127.5);
    return static_cast<std::uint8_t>(std::clamp(b, 0.0, 255.0));
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, const SplitSpec& spec) {
    const std::size_t n = ds.size();
    if (spec.test_count > n) {
        throw ContractError("test count " + std::to_string(spec.test_count) + " exceeds dataset size " +
                            std::to_string(n));
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(spec.seed);
    rng.shuffle(order);

    std::vector<std::size_t> test_idx(order.begin(), order.begin() + spec.test_count);
    std::vector<std::size_t> pool(order.begin() + spec.test_count, order.end());

    std::vector<std::size_t> train_idx;
    if (spec.per_class_cap > 0) {
        std::vector<std::size_t> taken(ds.num_classes, 0);
        for (std::size_t i : pool) {
            if (taken[ds.labels[i]] < spec.per_class_cap) {
                train_idx.push_back(i);
                ++taken[ds.labels[i]];
            }
        }
        for (std::size_t c = 0; c < ds.num_classes; ++c) {
            if (taken[c] < spec.per_class_cap) {
                throw ContractError("per-class cap " + std::to_string(spec.per_class_cap) +
                                    " exceeds population of class " + std::to_string(c));
            }
        }
    } else {
        train_idx = pool;
    }
    if (spec.train_count > 0) {
        if (spec.train_count > train_idx.size()) {
            throw ContractError("train count " + std::to_string(spec.train_count) + " exceeds available " +
                                std::to_string(train_idx.size()));
        }
        train_idx.resize(spec.train_count);
    }

    auto take = [&](const std::vector<std::size_t>& idx, const std::string& tag) {
        LabeledDataset out;
        out.name = ds.name + "/" + tag;
        out.num_classes = ds.num_classes;
        const std::size_t chw = ds.images.numel() / std::max<std::size_t>(1, ds.images.dim(0));
        std::vector<double> img(idx.size() * chw);
        const double* src = ds.images.data();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            std::copy(src + idx[i] * chw, src + (idx[i] + 1) * chw, img.begin() + i * chw);
            out.labels.push_back(ds.labels[idx[i]]);
        }
        Shape shape = ds.images.shape();
        shape[0] = idx.size();
        out.images = Tensor::from(shape, std::move(img));
        return out;
    };
    return {take(train_idx, "train"), take(test_idx, "test")};
}

namespace {
constexpr double kToyRadius = 2.0;
constexpr double kToySigma = 0.05;
constexpr double kToyScale = 1.0 / 2.5;
constexpr double kPi = 3.141592653589793238462643383279502884;
}  // namespace

Tensor toy_mode_centers(std::size_t modes) {
    if (modes < 1) throw ContractError("toy mixture needs at least one mode");
    std::vector<double> c(modes * 2);
    for (std::size_t m = 0; m < modes; ++m) {
        const double a = 2.0 * kPi * double(m) / double(modes);
        c[m * 2] = kToyRadius * std::cos(a) * kToyScale;
        c[m * 2 + 1] = kToyRadius * std::sin(a) * kToyScale;
    }
    return Tensor::from(Shape{modes, 2}, std::move(c));
}

LabeledDataset make_toy_mixture(std::size_t n, std::size_t modes, std::uint64_t seed) {
    if (modes < 1) throw ContractError("toy mixture needs at least one mode");
    Rng rng(seed);
    std::vector<double> pts(n * 2);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = rng.index(modes);
        const double a = 2.0 * kPi * double(m) / double(modes);
        const double x = kToyRadius * std::cos(a) + kToySigma * rng.normal();
        const double y = kToyRadius * std::sin(a) + kToySigma * rng.normal();
        pts[i * 2] = std::clamp(x * kToyScale, -1.0, 1.0);
        pts[i * 2 + 1] = std::clamp(y * kToyScale, -1.0, 1.0);
        labels[i] = m;
    }
    LabeledDataset ds;
    ds.name = "toy-mixture";
    ds.num_classes = modes;
    ds.images = Tensor::from(Shape{n, 1, 1, 2}, std::move(pts));
    ds.labels = std::move(labels);
    return ds;
}

std::vector<std::filesystem::path> export_images(const Tensor& images, const std::filesystem::path& dir) {
    if (images.rank() != 4) {
        throw ContractError("export_images expects [N x C x H x W], got " + shape_str(images.shape()));
    }
    const std::size_t n = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
    if (c != 1 && c != 3) {
        throw ContractError("export_images handles 1 or 3 channels, got " + std::to_string(c));
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create directory " + dir.string());
    }

    std::vector<std::filesystem::path> written;
    const double* px = images.data();
    for (std::size_t i = 0; i < n; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%04zu.%s", i, c == 1 ? "pgm" : "ppm");
        const std::filesystem::path path = dir / name;

        std::ostringstream head;
        head << (c == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n255\n";
        std::string header = head.str();

        std::vector<std::uint8_t> bytes(header.begin(), header.end());
        const double* img = px + i * c * h * w;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                // PPM wants interleaved RGB; the tensor stores channel planes.
                for (std::size_t ch = 0; ch < c; ++ch) {
                    bytes.push_back(denormalize_value(img[(ch * h + y) * w + x]));
                }
            }
        }
        write_file(path, bytes);
        written.push_back(path);
    }
    return written;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw IoError("sha256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::vector<ManifestEntry> parse_manifest(const std::string& text) {
    std::vector<ManifestEntry> entries;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const std::size_t sep = line.find("  ");
        if (sep == std::string::npos || sep != 64) {
            throw FormatError("manifest line " + std::to_string(lineno) +
                              " is not '<sha256><two spaces><name>'");
        }
        ManifestEntry e{line.substr(0, 64), line.substr(sep + 2)};
        for (char ch : e.sha256) {
            if (!std::isxdigit(static_cast<unsigned char>(ch))) {
                throw FormatError("manifest line " + std::to_string(lineno) + " has a non-hex digest");
            }
        }
        if (e.filename.empty()) {
            throw FormatError("manifest line " + std::to_string(lineno) + " names no file");
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

std::string render_manifest(const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const ManifestEntry& e : entries) {
        out += e.sha256;
        out += "  ";
        out += e.filename;
        out += "\n";
    }
    return out;
}

}  // namespace ganbench
