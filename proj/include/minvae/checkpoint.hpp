#ifndef MINVAE_CHECKPOINT_HPP_
#define MINVAE_CHECKPOINT_HPP_

#include <string>

#include "minvae/models.hpp"
#include "minvae/nn.hpp"

namespace minvae::io {

/// MINVAE1 checkpoint: magic "MINVAE1\n", one ASCII header line
/// "F L M K variant h_enc h_dec", then all parameters as little-endian
/// float64 in declared layer order (W row-major, then bias), the mixture
/// prior parameters and finally pi. Round-trips bit-exactly.
void save_checkpoint(const models::MinVae& m, const std::string& path);
models::MinVae load_checkpoint(const std::string& path);

/// Optimizer sidecar enabling exact training resume.
struct TrainState {
    int epochs_done = 0;
    nn::AdamState adam;
};

void save_train_state(const TrainState& st, const std::string& path);
TrainState load_train_state(const std::string& path, models::MinVae& model);

}  // namespace minvae::io

#endif  // MINVAE_CHECKPOINT_HPP_
