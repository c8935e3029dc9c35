#include "ptmark/harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <toml.hpp>

#include "ptmark/errors.hpp"
#include "ptmark/numerics/fft.hpp"
#include "ptmark/numerics/rng.hpp"

namespace ptmark {

namespace {

using ojson = nlohmann::ordered_json;

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

// TOML → JSON, node by node, so one schema serves both formats.
nlohmann::json toml_to_json(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        nlohmann::json obj = nlohmann::json::object();
        for (const auto& [k, v] : *t) obj[std::string(k.str())] = toml_to_json(v);
        return obj;
    }
    if (const auto* a = node.as_array()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : *a) arr.push_back(toml_to_json(v));
        return arr;
    }
    if (const auto* s = node.as_string()) return s->get();
    if (const auto* i = node.as_integer()) return i->get();
    if (const auto* f = node.as_floating_point()) return f->get();
    if (const auto* b = node.as_boolean()) return b->get();
    throw ConfigError("config: dates and times are not supported");
}

void json_to_toml(const ojson& j, toml::table& out);

toml::array json_array_to_toml(const ojson& j) {
    toml::array arr;
    for (const auto& v : j) {
        if (v.is_object()) {
            toml::table t;
            json_to_toml(v, t);
            arr.push_back(std::move(t));
        } else if (v.is_array()) {
            arr.push_back(json_array_to_toml(v));
        } else if (v.is_string()) {
            arr.push_back(v.get<std::string>());
        } else if (v.is_boolean()) {
            arr.push_back(v.get<bool>());
        } else if (v.is_number_float()) {
            arr.push_back(v.get<double>());
        } else {
            arr.push_back(v.get<std::int64_t>());
        }
    }
    return arr;
}

void json_to_toml(const ojson& j, toml::table& out) {
    for (const auto& [k, v] : j.items()) {
        if (v.is_object()) {
            toml::table t;
            json_to_toml(v, t);
            out.insert(k, std::move(t));
        } else if (v.is_array()) {
            out.insert(k, json_array_to_toml(v));
        } else if (v.is_string()) {
            out.insert(k, v.get<std::string>());
        } else if (v.is_boolean()) {
            out.insert(k, v.get<bool>());
        } else if (v.is_number_float()) {
            out.insert(k, v.get<double>());
        } else {
            out.insert(k, v.get<std::int64_t>());
        }
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

void RunConfig::validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
    if (prompts.empty()) fail("prompt list is empty");
    if (seeds.empty()) fail("seed list is empty");
    if (denoiser.channels != 4) fail("the pixel-shuffle codec needs 4 latent channels");
    if (!is_power_of_two(denoiser.height) || !is_power_of_two(denoiser.width) || denoiser.height < 2 ||
        denoiser.width < 2)
        fail("latent height and width must be powers of two");
    if (denoiser.dim == 0) fail("embedding dimension must be positive");
    if (key.height != denoiser.height || key.width != denoiser.width) fail("key grid must match the latent grid");
    if (key.channel >= denoiser.channels) fail("key channel out of range");
    if (key.radius < 1 || 2 * static_cast<std::size_t>(key.radius) >= std::min(key.height, key.width))
        fail("key radius must lie in [1, min(h, w)/2)");
    if (!(threshold > 0.0 && threshold <= 1.0)) fail("threshold must lie in (0, 1]");
    if (!(failure_threshold >= 0.0 && failure_threshold <= 1.0)) fail("failure_threshold must lie in [0, 1]");
    if (tuning.start_step > static_cast<std::size_t>(schedule.t_sample)) fail("start_step beyond the sampling ladder");
    for (std::size_t s : ablation.start_step)
        if (s > static_cast<std::size_t>(schedule.t_sample)) fail("ablation start_step beyond the sampling ladder");
    try {
        tuning.validate();
        for (const auto& p : perturbations) ptmark::validate(p);
        NoiseSchedule probe(schedule);
        (void)probe;
    } catch (const DomainError& e) {
        fail(e.what());
    }
    for (double l : ablation.lambda1)
        if (!(l >= 0.0)) fail("ablation lambda1 values must be >= 0");
    for (double l : ablation.lambda2)
        if (!(l >= 0.0)) fail("ablation lambda2 values must be >= 0");
}

ojson to_json(const RunConfig& cfg) {
    ojson j;
    j["output_dir"] = cfg.output_dir;
    j["prompts"] = cfg.prompts;
    j["seeds"] = cfg.seeds;
    j["threshold"] = cfg.threshold;
    j["verify_embedding"] = cfg.verify_embedding == VerifyEmbedding::prompt ? "prompt" : "null";
    j["failure_threshold"] = cfg.failure_threshold;

    const auto& d = cfg.denoiser;
    j["denoiser"] = {{"seed", d.seed},         {"dim", d.dim},     {"channels", d.channels}, {"height", d.height},
                     {"width", d.width},       {"gamma", d.gamma}, {"beta_add", d.beta_add}};
    const auto& s = cfg.schedule;
    j["schedule"] = {
        {"t_train", s.t_train}, {"beta_min", s.beta_min}, {"beta_max", s.beta_max}, {"t_sample", s.t_sample}};
    j["key"] = {{"seed", cfg.key.seed}, {"radius", cfg.key.radius}, {"channel", cfg.key.channel}};
    const auto& t = cfg.tuning;
    j["tuning"] = {{"lambda1", t.lambda1},
                   {"lambda2", t.lambda2},
                   {"n_iters", t.n_iters},
                   {"guidance_w", t.guidance_w},
                   {"lr", t.lr},
                   {"saliency_q", t.saliency_q},
                   {"start_step", t.start_step},
                   {"optimizer", to_string(t.optimizer)},
                   {"adam_beta1", t.adam_beta1},
                   {"adam_beta2", t.adam_beta2},
                   {"adam_eps", t.adam_eps}};
    j["perturbations"] = ojson::array();
    for (const auto& p : cfg.perturbations) j["perturbations"].push_back(to_json(p));
    j["ablation"] = {{"lambda1", cfg.ablation.lambda1},
                     {"lambda2", cfg.ablation.lambda2},
                     {"n_iters", cfg.ablation.n_iters},
                     {"start_step", cfg.ablation.start_step}};
    return j;
}

RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    try {
        if (!j.is_object()) throw ConfigError("config: top level must be a table/object");
        read(j, "output_dir", cfg.output_dir);
        read(j, "prompts", cfg.prompts);
        if (j.contains("prompts_file")) {
            std::filesystem::path file = j.at("prompts_file").get<std::string>();
            if (file.is_relative()) file = base_dir / file;
            const auto extra = read_prompt_file(file);
            if (!j.contains("prompts")) cfg.prompts.clear();
            cfg.prompts.insert(cfg.prompts.end(), extra.begin(), extra.end());
        }
        read(j, "seeds", cfg.seeds);
        read(j, "threshold", cfg.threshold);
        if (j.contains("verify_embedding")) {
            const auto v = j.at("verify_embedding").get<std::string>();
            if (v == "prompt")
                cfg.verify_embedding = VerifyEmbedding::prompt;
            else if (v == "null")
                cfg.verify_embedding = VerifyEmbedding::null;
            else
                throw ConfigError("config: verify_embedding must be 'prompt' or 'null'");
        }
        read(j, "failure_threshold", cfg.failure_threshold);

        if (j.contains("denoiser")) {
            const auto& d = j.at("denoiser");
            read(d, "seed", cfg.denoiser.seed);
            read(d, "dim", cfg.denoiser.dim);
            read(d, "channels", cfg.denoiser.channels);
            read(d, "height", cfg.denoiser.height);
            read(d, "width", cfg.denoiser.width);
            read(d, "gamma", cfg.denoiser.gamma);
            read(d, "beta_add", cfg.denoiser.beta_add);
        }
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            read(s, "t_train", cfg.schedule.t_train);
            read(s, "beta_min", cfg.schedule.beta_min);
            read(s, "beta_max", cfg.schedule.beta_max);
            read(s, "t_sample", cfg.schedule.t_sample);
        }
        if (j.contains("key")) {
            const auto& k = j.at("key");
            read(k, "seed", cfg.key.seed);
            read(k, "radius", cfg.key.radius);
            read(k, "channel", cfg.key.channel);
        }
        cfg.key.height = cfg.denoiser.height;
        cfg.key.width = cfg.denoiser.width;
        if (j.contains("tuning")) {
            const auto& t = j.at("tuning");
            read(t, "lambda1", cfg.tuning.lambda1);
            read(t, "lambda2", cfg.tuning.lambda2);
            read(t, "n_iters", cfg.tuning.n_iters);
            read(t, "guidance_w", cfg.tuning.guidance_w);
            read(t, "lr", cfg.tuning.lr);
            read(t, "saliency_q", cfg.tuning.saliency_q);
            read(t, "start_step", cfg.tuning.start_step);
            if (t.contains("optimizer")) cfg.tuning.optimizer = optimizer_from_string(t.at("optimizer").get<std::string>());
            read(t, "adam_beta1", cfg.tuning.adam_beta1);
            read(t, "adam_beta2", cfg.tuning.adam_beta2);
            read(t, "adam_eps", cfg.tuning.adam_eps);
        }
        if (j.contains("perturbations")) {
            cfg.perturbations.clear();
            for (const auto& p : j.at("perturbations")) cfg.perturbations.push_back(perturbation_from_json(p));
        }
        if (j.contains("ablation")) {
            const auto& a = j.at("ablation");
            read(a, "lambda1", cfg.ablation.lambda1);
            read(a, "lambda2", cfg.ablation.lambda2);
            read(a, "n_iters", cfg.ablation.n_iters);
            read(a, "start_step", cfg.ablation.start_step);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string config_to_toml(const RunConfig& cfg) {
    for (std::uint64_t s : cfg.seeds)
        if (s > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
            throw ConfigError("config: TOML integers cannot hold seeds above 2^63 - 1; save as JSON");
    toml::table root;
    json_to_toml(to_json(cfg), root);
    std::ostringstream out;
    out << root << "\n";
    return out.str();
}

RunConfig config_from_toml(const std::string& text, const std::filesystem::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "config: TOML parse error at line " << e.source().begin.line << ": " << e.description();
        throw ConfigError(msg.str());
    }
    return config_from_json(toml_to_json(root), base_dir);
}

RunConfig load_config(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const auto base = path.parent_path();
    const auto ext = path.extension().string();
    if (ext == ".toml") return config_from_toml(text, base);
    if (ext == ".json") {
        try {
            return config_from_json(nlohmann::json::parse(text), base);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
    try {
        return config_from_json(nlohmann::json::parse(text), base);
    } catch (const nlohmann::json::parse_error&) {
        return config_from_toml(text, base);
    }
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << (path.extension() == ".toml" ? config_to_toml(cfg) : to_json(cfg).dump(2) + "\n");
}

std::string config_hash(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
    return buf;
}

std::vector<std::string> read_prompt_file(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> prompts;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        prompts.push_back(line);
    }
    return prompts;
}

}  // namespace ptmark
