#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ganbench/data_io.hpp"

namespace ganbench::cli {

// Exit codes shared by every verb.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;    // bad flags, bad config, contract violations
inline constexpr int kData = 3;     // missing/corrupt input files
inline constexpr int kNumeric = 4;  // NaN/Inf during computation

inline constexpr const char* kVersion = "1.0.0";

struct PrepareOptions {
    std::string dataset;
    std::filesystem::path dir;
    bool write_manifest = false;
};

struct TrainOptions {
    std::filesystem::path config;
    std::filesystem::path out_dir = ".";
};

struct EvalOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path config;
    std::string split = "test";
    std::filesystem::path out;
    std::filesystem::path roc_csv;   // optional
    int positive_class = -1;         // -1: from config / default 0
};

struct CompareOptions {
    std::vector<std::filesystem::path> reports;
    std::filesystem::path out;
};

struct RocOptions {
    std::vector<std::filesystem::path> reports;
    std::filesystem::path out_csv;  // optional
    std::filesystem::path out_svg;  // optional
};

struct GenerateOptions {
    std::filesystem::path checkpoint;
    std::size_t count = 16;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
};

int cmd_prepare(const PrepareOptions& opt);
int cmd_train(const TrainOptions& opt);
int cmd_eval(const EvalOptions& opt);
int cmd_compare(const CompareOptions& opt);
int cmd_roc(const RocOptions& opt);
int cmd_generate(const GenerateOptions& opt);

// Parses argv-style arguments (excluding the program name) and dispatches.
int run_cli(const std::vector<std::string>& args);

// Loads one side of the dataset a config describes ("train" or "test").
// Raw pixels are normalized after splitting.
LabeledDataset load_dataset_side(const nlohmann::json& config, const std::string& side);

// Two-decimal rendering with ties resolved to even on the scaled value.
std::string format_2dp(double v);

}  // namespace ganbench::cli
