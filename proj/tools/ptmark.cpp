// Command-line front end: key management, single-image operations and batch evaluation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ptmark/diffusion/codec.hpp"
#include "ptmark/errors.hpp"
#include "ptmark/harness/config.hpp"
#include "ptmark/harness/eval.hpp"
#include "ptmark/harness/tensor_io.hpp"
#include "ptmark/tuning/pivotal.hpp"
#include "ptmark/watermark/key_store.hpp"

namespace fs = std::filesystem;
using namespace ptmark;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitEvalFailures = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string out;
};

RunConfig load_run_config(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
    if (const char* env = std::getenv("PTMARK_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    if (!c.out.empty()) cfg.output_dir = c.out;
    cfg.validate();
    return cfg;
}

ToyDenoiser make_denoiser(const RunConfig& cfg) { return ToyDenoiser(cfg.denoiser, NoiseSchedule(cfg.schedule)); }

WatermarkKey key_for(const RunConfig& cfg, const std::string& key_file) {
    return key_file.empty() ? keygen(cfg.key) : load_key(key_file);
}

Image reference_image(const RunConfig& cfg, const ToyDenoiser& d, const std::string& prompt, std::uint64_t seed) {
    SeededRng rng(derive_seed(derive_seed(seed, fnv1a64(prompt)), std::string_view("initial-noise")));
    const Latent z_T = gaussian_grid(rng, cfg.denoiser.channels, cfg.denoiser.height, cfg.denoiser.width);
    return decode(sample_trajectory(d, z_T, prompt_embed(prompt, cfg.denoiser.dim), null_embed(cfg.denoiser.dim),
                                    cfg.tuning.guidance_w)
                      .back());
}

void write_image_pair(const fs::path& prefix, const Image& x) {
    save_image(fs::path(prefix.string() + ".ptt"), x);
    write_pgm(fs::path(prefix.string() + ".pgm"), x);
    std::cout << "wrote " << prefix.string() << ".ptt and .pgm\n";
}

// "jpeg:25" style shorthand, or a JSON object.
PerturbationSpec parse_perturbation(const std::string& text) {
    if (!text.empty() && text.front() == '{') {
        try {
            return perturbation_from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("perturbation: ") + e.what());
        }
    }
    static const std::map<std::string, std::string> field = {
        {"jpeg", "quality"},      {"crop", "area_fraction"}, {"blur", "radius"},    {"noise", "intensity"},
        {"brightness", "factor"}, {"rotate", "degrees"},     {"regenerate", "steps"}};
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const auto it = field.find(kind);
    if (it == field.end()) throw ConfigError("unknown perturbation '" + kind + "'");
    nlohmann::json j;
    j["kind"] = kind;
    if (colon != std::string::npos) {
        try {
            j[it->second] = nlohmann::json::parse(text.substr(colon + 1));
        } catch (const nlohmann::json::parse_error&) {
            throw ConfigError("perturbation parameter '" + text.substr(colon + 1) + "' is not a number");
        }
    } else {
        for (const auto& d : severity_defaults())
            if (kind_name(d) == kind) return d;
    }
    return perturbation_from_json(j);
}

void add_common(CLI::App* sub, Common& c, bool batch) {
    sub->add_option("--config", c.config, "TOML or JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output directory (default: $PTMARK_OUTPUT_DIR or the config's output_dir)");
    if (batch) {
        sub->add_option("--seed", c.seed, "first seed; the config's seed list is replaced by consecutive seeds");
        sub->add_option("--threads", c.threads, "worker threads (0 = all cores)");
    }
}

int finish_batch(const EvalReport& report, const RunConfig& cfg) {
    for (const auto& p : write_report(cfg.output_dir, report, cfg)) std::cout << "wrote " << p.string() << "\n";
    std::cout << report_table(report);
    for (const auto& f : report.failures)
        std::cerr << "failed: prompt='" << f.prompt << "' seed=" << f.seed << ": " << f.error << "\n";
    if (report.exceeds_failure_threshold(cfg.failure_threshold)) {
        std::cerr << report.failures.size() << " of " << report.attempted << " items failed (limit "
                  << cfg.failure_threshold * 100 << "%)\n";
        return kExitEvalFailures;
    }
    return 0;
}

void apply_seed_override(RunConfig& cfg, const Common& c) {
    if (!c.seed) return;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) cfg.seeds[i] = *c.seed + i;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ptmark: ring-key watermarking with semantic-aware pivotal tuning on a toy latent diffusion model"};
    app.require_subcommand(1);

    Common common;
    std::string key_file, input, prompt = "a red fox resting in fresh snow", perturbation, axis = "modules";
    std::uint64_t item_seed = 0;
    std::optional<std::uint64_t> key_seed;
    std::optional<int> radius;
    std::optional<double> threshold;
    bool null_prompt = false;

    auto* keygen_cmd = app.add_subcommand("keygen", "generate a watermark key and store it under <out>/keys");
    add_common(keygen_cmd, common, false);
    keygen_cmd->add_option("--key-seed", key_seed, "key seed (default from config)");
    keygen_cmd->add_option("--radius", radius, "ring mask radius (default from config)");

    auto* embed_cmd = app.add_subcommand("embed", "generate a Tree-Ring style watermarked image (no tuning)");
    auto* tune_cmd = app.add_subcommand("tune", "generate a PT-Mark watermarked image by pivotal tuning");
    for (auto* sub : {embed_cmd, tune_cmd}) {
        add_common(sub, common, false);
        sub->add_option("--key", key_file, "key file (default: key from config)");
        sub->add_option("--input", input, "image to watermark (.ptt or .pgm); default: generate one from --seed");
        sub->add_option("--prompt", prompt, "prompt");
        sub->add_option("--seed", item_seed, "seed for the generated source image");
    }

    auto* verify_cmd = app.add_subcommand("verify", "test an image for the watermark");
    add_common(verify_cmd, common, false);
    verify_cmd->add_option("--key", key_file, "key file (default: key from config)");
    verify_cmd->add_option("--input", input, "image (.ptt or .pgm)")->required();
    verify_cmd->add_option("--prompt", prompt, "prompt used for inversion");
    verify_cmd->add_flag("--null-prompt", null_prompt, "invert under the empty prompt instead");
    verify_cmd->add_option("--threshold", threshold, "p-value threshold (default from config)");

    auto* attack_cmd = app.add_subcommand("attack", "apply one perturbation to an image");
    add_common(attack_cmd, common, false);
    attack_cmd->add_option("--input", input, "image (.ptt or .pgm)")->required();
    attack_cmd->add_option("--perturbation", perturbation, "e.g. jpeg:25, rotate:75, or a JSON object")->required();
    attack_cmd->add_option("--seed", item_seed, "seed for random perturbations");

    auto* eval_cmd = app.add_subcommand("eval", "Tree-Ring vs PT-Mark quality and robustness table");
    add_common(eval_cmd, common, true);

    auto* ablate_cmd = app.add_subcommand("ablate", "ablation table over one axis");
    add_common(ablate_cmd, common, true);
    ablate_cmd->add_option("--axis", axis, "lambda_grid, n_iters, start_step or modules");

    auto* report_cmd = app.add_subcommand("report", "re-render CSV, table and plots from a JSON report");
    add_common(report_cmd, common, false);
    report_cmd->add_option("--input", input, "report JSON written by eval or ablate")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (keygen_cmd->parsed()) {
            RunConfig cfg = load_run_config(common);
            KeyParams params = cfg.key;
            if (key_seed) params.seed = *key_seed;
            if (radius) params.radius = *radius;
            const WatermarkKey key = keygen(params);
            const fs::path path = save_key(fs::path(cfg.output_dir) / "keys", key);
            std::cout << key.fingerprint() << "  " << path.string() << "\n";
            return 0;
        }

        if (embed_cmd->parsed() || tune_cmd->parsed()) {
            const RunConfig cfg = load_run_config(common);
            const ToyDenoiser d = make_denoiser(cfg);
            const WatermarkKey key = key_for(cfg, key_file);
            const Image source = input.empty() ? reference_image(cfg, d, prompt, item_seed) : read_any_image(input);
            TuningConfig tuning = cfg.tuning;
            if (embed_cmd->parsed()) tuning.n_iters = 0;
            const TuneResult r = pivotal_tune(d, encode(source), key, prompt_embed(prompt, cfg.denoiser.dim), tuning);

            const std::string stem = embed_cmd->parsed() ? "embed" : "tune";
            const fs::path prefix = fs::path(cfg.output_dir) / (stem + "_" + std::to_string(item_seed));
            if (input.empty()) write_image_pair(fs::path(cfg.output_dir) / ("source_" + std::to_string(item_seed)), source);
            write_image_pair(prefix, r.image);
            if (tune_cmd->parsed()) {
                std::ofstream csv(prefix.string() + "_loss.csv", std::ios::binary);
                write_loss_csv(csv, r.curves);
                nlohmann::ordered_json nulls = nlohmann::ordered_json::array();
                for (const auto& e : r.nulls.per_step) nulls.push_back(e.values);
                std::ofstream(prefix.string() + "_nulls.json", std::ios::binary) << nulls.dump() << "\n";
                std::cout << "wrote " << prefix.string() << "_loss.csv and _nulls.json\n";
            }
            return 0;
        }

        if (verify_cmd->parsed()) {
            const RunConfig cfg = load_run_config(common);
            const ToyDenoiser d = make_denoiser(cfg);
            const WatermarkKey key = key_for(cfg, key_file);
            const Embedding cond = null_prompt ? null_embed(cfg.denoiser.dim) : prompt_embed(prompt, cfg.denoiser.dim);
            const auto rep = verify(read_any_image(input), d, key, cond, threshold.value_or(cfg.threshold));
            nlohmann::ordered_json j;
            j["key"] = key.fingerprint();
            j["eta"] = rep.eta;
            j["sigma2"] = rep.sigma2;
            j["dof"] = rep.dof;
            j["noncentrality"] = rep.noncentrality;
            j["p_value"] = rep.p_value;
            j["threshold"] = rep.threshold;
            j["watermarked"] = rep.decision;
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (attack_cmd->parsed()) {
            const RunConfig cfg = load_run_config(common);
            const ToyDenoiser d = make_denoiser(cfg);
            const PerturbationSpec spec = parse_perturbation(perturbation);
            SeededRng rng(derive_seed(item_seed, std::string_view("attack")));
            const RegenerateContext ctx{&d, null_embed(cfg.denoiser.dim)};
            const Image out = apply_perturbation(read_any_image(input), spec, rng, &ctx);
            write_image_pair(fs::path(cfg.output_dir) / (fs::path(input).stem().string() + "_" + label(spec)), out);
            return 0;
        }

        if (eval_cmd->parsed() || ablate_cmd->parsed()) {
            RunConfig cfg = load_run_config(common);
            apply_seed_override(cfg, common);
            const EvalReport report = eval_cmd->parsed()
                                          ? run_eval(cfg, common.threads)
                                          : run_ablation(cfg, ablation_axis_from_string(axis), common.threads);
            return finish_batch(report, cfg);
        }

        if (report_cmd->parsed()) {
            std::ifstream in(input, std::ios::binary);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::parse_error& e) {
                throw ConfigError(std::string("report: ") + e.what());
            }
            const EvalReport report = report_from_json(j);
            const fs::path dir = common.out.empty() ? fs::path(input).parent_path() : fs::path(common.out);
            fs::create_directories(dir);
            std::ofstream(dir / (report.name + ".csv"), std::ios::binary) << report_csv(report);
            std::ofstream(dir / (report.name + "_auc.svg"), std::ios::binary) << auc_bar_svg(report);
            std::cout << report_table(report);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
