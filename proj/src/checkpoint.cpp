#include "ganbench/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "ganbench/data_io.hpp"
#include "ganbench/errors.hpp"

namespace ganbench {

namespace {

constexpr char kMagic[8] = {'G', 'A', 'N', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::vector<std::uint8_t>& out, const std::string& s) {
    put_u32(out, std::uint32_t(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

class Reader {
  public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

    std::string str(const char* what) {
        const std::uint32_t len = u32(what);
        need(len, what);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    void magic() {
        need(sizeof(kMagic), "magic");
        if (std::memcmp(bytes_.data(), kMagic, sizeof(kMagic)) != 0) {
            throw FormatError("not a checkpoint: bad magic");
        }
        pos_ += sizeof(kMagic);
    }

    bool done() const { return pos_ == bytes_.size(); }

  private:
    void need(std::size_t n, const char* what) {
        if (pos_ + n > bytes_.size()) {
            throw FormatError(std::string("checkpoint truncated while reading ") + what);
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

// Batchnorm running statistics are named after the layer's parameter
// prefix: "<prefix>.gamma" owns "<prefix>.running_mean" / "_var".
void collect_bn_names(const std::vector<LayerConfig>& stack, std::vector<std::string>& by_index) {
    for (const LayerConfig& lc : stack) {
        if (lc.kind == LayerKind::Batchnorm) {
            const std::string& gamma = lc.param_names.at(0);
            const std::string prefix = gamma.substr(0, gamma.rfind('.'));
            if (lc.bn_index >= by_index.size()) by_index.resize(lc.bn_index + 1);
            by_index[lc.bn_index] = prefix;
        }
        collect_bn_names(lc.branch, by_index);
        collect_bn_names(lc.projection, by_index);
    }
}

std::vector<std::string> bn_prefixes(const ModelSpec& model) {
    std::vector<std::string> by_index;
    collect_bn_names(model.layers, by_index);
    collect_bn_names(model.aux_layers, by_index);
    if (by_index.size() != model.bn_states.size()) {
        throw ContractError("model layer list references fewer batchnorm states than it owns");
    }
    return by_index;
}

void put_tensor(std::vector<std::uint8_t>& out, const std::string& name, const Tensor& t) {
    put_str(out, name);
    put_u32(out, std::uint32_t(t.rank()));
    for (std::size_t d = 0; d < t.rank(); ++d) put_u64(out, t.dim(d));
    for (std::size_t i = 0; i < t.numel(); ++i) put_f64(out, t.at(i));
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelSpec& model) {
    const std::vector<std::string> prefixes = bn_prefixes(model);

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + sizeof(kMagic));
    put_u32(out, kVersion);
    put_str(out, model.kind);
    put_str(out, model.config.dump());
    put_u32(out, std::uint32_t(model.params.size() + 2 * model.bn_states.size()));
    for (const auto& entry : model.params) put_tensor(out, entry.name, entry.value);
    for (std::size_t i = 0; i < model.bn_states.size(); ++i) {
        put_tensor(out, prefixes[i] + ".running_mean", model.bn_states[i].running_mean);
        put_tensor(out, prefixes[i] + ".running_var", model.bn_states[i].running_var);
    }
    return out;
}

ModelSpec deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    r.magic();
    const std::uint32_t version = r.u32("version");
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    const std::string kind = r.str("model kind");
    const std::string config_text = r.str("config");
    nlohmann::json config = nlohmann::json::parse(config_text, nullptr, false);
    if (config.is_discarded()) throw FormatError("checkpoint config is not valid JSON");

    const std::uint32_t count = r.u32("tensor count");
    std::map<std::string, Tensor> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.str("tensor name");
        const std::uint32_t rank = r.u32("tensor rank");
        Shape shape;
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape.push_back(std::size_t(r.u64("tensor dims")));
            numel *= shape.back();
        }
        std::vector<double> values(numel);
        for (std::size_t j = 0; j < numel; ++j) values[j] = r.f64("tensor values");
        if (!tensors.emplace(name, Tensor::from_unchecked(std::move(shape), std::move(values))).second) {
            throw ConsistencyError("checkpoint repeats tensor " + name);
        }
    }
    if (!r.done()) throw FormatError("checkpoint has trailing bytes");

    ModelSpec model = build_model_from_config(config, config.is_object() ? config.value("seed", 0) : 0);
    if (model.kind != kind) {
        throw ConsistencyError("checkpoint kind " + kind + " does not match config-built model " + model.kind);
    }

    const std::vector<std::string> prefixes = bn_prefixes(model);
    std::size_t expected = model.params.size() + 2 * model.bn_states.size();
    if (tensors.size() != expected) {
        throw ConsistencyError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, model needs " +
                               std::to_string(expected));
    }
    auto take = [&](const std::string& name, const Shape& shape) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ConsistencyError("checkpoint is missing tensor " + name);
        if (it->second.shape() != shape) {
            throw ConsistencyError("checkpoint tensor " + name + " has shape " + shape_str(it->second.shape()) +
                                   ", model expects " + shape_str(shape));
        }
        return it->second;
    };
    for (auto& entry : model.params) entry.value = take(entry.name, entry.value.shape());
    for (std::size_t i = 0; i < model.bn_states.size(); ++i) {
        model.bn_states[i].running_mean = take(prefixes[i] + ".running_mean", Shape{model.bn_states[i].running_mean.dim(0)});
        model.bn_states[i].running_var = take(prefixes[i] + ".running_var", Shape{model.bn_states[i].running_var.dim(0)});
    }
    return model;
}

void save_checkpoint(const ModelSpec& model, const std::filesystem::path& path) {
    write_file(path, serialize_checkpoint(model));
}

ModelSpec load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(read_file(path));
}

}  // namespace ganbench
