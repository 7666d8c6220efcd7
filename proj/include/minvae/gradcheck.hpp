#ifndef MINVAE_GRADCHECK_HPP_
#define MINVAE_GRADCHECK_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "minvae/train.hpp"

namespace minvae::gradcheck {

struct SuiteResult {
    std::string name;
    bool pass = false;
    double max_err = 0.0;
    std::string detail;
};

/// Central finite differences against every analytic gradient the losses
/// produce. Known suites: backward, elbo, minvae, sabotage (the last one
/// corrupts a gradient on purpose and passes iff the mismatch is caught).
std::vector<SuiteResult> run_suites(const std::vector<std::string>& suites, std::uint64_t seed);

const std::vector<std::string>& known_suites();

}  // namespace minvae::gradcheck

#endif  // MINVAE_GRADCHECK_HPP_
