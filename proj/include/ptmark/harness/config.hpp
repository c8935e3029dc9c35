#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptmark/diffusion/denoiser.hpp"
#include "ptmark/perturb/perturb.hpp"
#include "ptmark/tuning/config.hpp"
#include "ptmark/watermark/detect.hpp"
#include "ptmark/watermark/key.hpp"

namespace ptmark {

/// Which embedding verification inverts under.
enum class VerifyEmbedding { prompt, null };

struct AblationGrids {
    std::vector<double> lambda1 = {0.50, 1.00, 1.50, 2.00};
    std::vector<double> lambda2 = {0.0003, 0.0005, 0.0007};
    std::vector<std::size_t> n_iters = {5, 10, 15, 20};
    std::vector<std::size_t> start_step = {0, 10, 20, 30, 40};

    bool operator==(const AblationGrids&) const = default;
};

struct RunConfig {
    DenoiserParams denoiser;
    ScheduleParams schedule;
    KeyParams key;  // height/width always follow the denoiser
    TuningConfig tuning;
    std::vector<PerturbationSpec> perturbations = severity_defaults();
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<std::string> prompts = {"a red fox resting in fresh snow", "a lighthouse on a rocky coast at dusk"};
    std::string output_dir = "ptmark-out";
    double threshold = kDefaultThreshold;
    VerifyEmbedding verify_embedding = VerifyEmbedding::prompt;
    double failure_threshold = 0.10;  // failed fraction above which a run exits with status 3
    AblationGrids ablation;

    /// Throws ConfigError on any inconsistency (empty prompt or seed lists, bad ranges, key/denoiser mismatch).
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);
/// Missing fields keep their defaults. `base_dir` resolves a relative `prompts_file`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

std::string config_to_toml(const RunConfig& cfg);
RunConfig config_from_toml(const std::string& text, const std::filesystem::path& base_dir = {});

/// Chooses the format from the extension (.toml or .json); anything else is tried as JSON, then TOML.
RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

/// 16 hex digits over the canonical JSON form.
std::string config_hash(const RunConfig& cfg);

/// Newline-delimited prompt list; blank lines and lines starting with '#' are skipped.
std::vector<std::string> read_prompt_file(const std::filesystem::path& path);

}  // namespace ptmark
