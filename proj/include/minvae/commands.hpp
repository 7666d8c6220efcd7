#ifndef MINVAE_COMMANDS_HPP_
#define MINVAE_COMMANDS_HPP_

#include "minvae/config.hpp"

namespace minvae::cli {

/// Subcommand entry points. They throw InvalidInput / IoError /
/// NumericalError; the exit-code mapping lives in the CLI main.
int cmd_synth(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_enhance(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_gradcheck(const RunConfig& cfg);

}  // namespace minvae::cli

#endif  // MINVAE_COMMANDS_HPP_
