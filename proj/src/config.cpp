#include "minvae/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "minvae/common.hpp"

namespace minvae::cli {

namespace {

const std::vector<std::string>& registry() {
    static const std::vector<std::string> keys = {
        // global
        "seed", "variant", "out", "checkpoint", "corpus", "threads",
        // dsp geometry
        "window_len", "hop",
        // model architecture
        "hidden_enc", "hidden_dec", "latent_dim", "visual_dim",
        // training
        "epochs", "batch_size", "learning_rate", "noise_injection", "noise_fraction",
        "noise_snr_db", "resume", "init_decoder_from", "init_audio_enc_from",
        "init_visual_enc_from",
        // enhancement
        "vem_iters", "mh_total", "mh_burnin", "epsilon", "nmf_rank", "nmf_init_scale", "pi_init",
        "init_mode", "input", "features",
        // synthetic corpus
        "n_utterances", "frames_per_utterance", "f_bins", "informativeness",
        // evaluation
        "snr_levels", "oracle",
        // gradcheck
        "suites",
    };
    return keys;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig::RunConfig() = default;

const std::vector<std::string>& RunConfig::known_keys() { return registry(); }

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& keys = registry();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
        throw InvalidInput("unknown config key: " + key);
    values_[key] = value;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config " + path + ":" + std::to_string(lineno) +
                               ": expected key=value");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::string RunConfig::get_str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw InvalidInput("missing config key: " + key);
    return it->second;
}

std::string RunConfig::get_str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string RunConfig::require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end() || it->second.empty())
        throw InvalidInput("required setting missing: " + key);
    return it->second;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        auto v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InvalidInput("config key " + key + " expects an integer, got '" + it->second + "'");
    }
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        auto v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InvalidInput("config key " + key + " expects an unsigned integer, got '" +
                           it->second + "'");
    }
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InvalidInput("config key " + key + " expects a number, got '" + it->second + "'");
    }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw InvalidInput("config key " + key + " expects a boolean, got '" + v + "'");
}

std::vector<double> RunConfig::get_double_list(const std::string& key,
                                               const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw InvalidInput("config key " + key + ": bad list element '" + tok + "'");
        }
    }
    if (out.empty())
        throw InvalidInput("config key " + key + " expects a comma-separated number list");
    return out;
}

}  // namespace minvae::cli
