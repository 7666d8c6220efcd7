#ifndef MINVAE_CONFIG_HPP_
#define MINVAE_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace minvae::cli {

/// Merged key=value settings. Unknown keys are rejected up front; flag
/// overrides win over config-file values.
class RunConfig {
  public:
    RunConfig();

    /// Parses `key = value` lines ('#' comments, blank lines allowed).
    void load_file(const std::string& path);
    /// Applies one override; rejects unknown keys.
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;

    /// Throws InvalidInput when `key` was never provided.
    std::string require(const std::string& key) const;

    static const std::vector<std::string>& known_keys();

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace minvae::cli

#endif  // MINVAE_CONFIG_HPP_
