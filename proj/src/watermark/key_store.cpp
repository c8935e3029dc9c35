#include "ptmark/watermark/key_store.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ptmark/errors.hpp"

namespace ptmark {

std::string key_to_json(const WatermarkKey& key) {
    nlohmann::ordered_json j;
    j["version"] = kKeyFormatVersion;
    j["seed"] = key.params.seed;
    j["channel"] = key.params.channel;
    j["radius"] = key.params.radius;
    j["h"] = key.params.height;
    j["w"] = key.params.width;
    j["rings"] = nlohmann::ordered_json::array();
    for (const auto& ring : key.rings) {
        nlohmann::ordered_json r;
        r["radius"] = ring.radius;
        r["re"] = ring.value.real();
        r["im"] = ring.value.imag();
        j["rings"].push_back(std::move(r));
    }
    return j.dump(2) + "\n";
}

WatermarkKey key_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("key file: ") + e.what());
    }

    KeyParams params;
    try {
        if (j.at("version").get<int>() != kKeyFormatVersion) throw ConfigError("key file: unsupported version");
        params.seed = j.at("seed").get<std::uint64_t>();
        params.channel = j.at("channel").get<std::size_t>();
        params.radius = j.at("radius").get<int>();
        params.height = j.at("h").get<std::size_t>();
        params.width = j.at("w").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("key file: ") + e.what());
    }

    WatermarkKey key = keygen(params);
    try {
        const auto& rings = j.at("rings");
        if (!rings.is_array() || rings.size() != key.rings.size())
            throw ConfigError("key file: ring count does not match the regenerated key");
        for (std::size_t i = 0; i < rings.size(); ++i) {
            const auto& r = rings[i];
            const std::complex<double> stored(r.at("re").get<double>(), r.at("im").get<double>());
            const auto& expected = key.rings[i];
            const double tol = 1e-9 * std::max(1.0, std::abs(expected.value));
            if (r.at("radius").get<int>() != expected.radius || std::abs(stored - expected.value) > tol) {
                std::ostringstream msg;
                msg << "key file: checksum mismatch at ring " << expected.radius;
                throw ConfigError(msg.str());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("key file: ") + e.what());
    }
    return key;
}

std::filesystem::path save_key(const std::filesystem::path& dir, const WatermarkKey& key) {
    std::filesystem::create_directories(dir);
    const auto path = dir / (key.fingerprint() + ".json");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write key file " + path.string());
    out << key_to_json(key);
    return path;
}

WatermarkKey load_key(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot read key file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return key_from_json(buf.str());
}

}  // namespace ptmark
