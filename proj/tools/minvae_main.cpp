// minvae CLI: synth | train | enhance | eval | gradcheck
// Exit codes: 0 ok, 2 usage/config error, 3 I/O error, 4 numerical error.

#include <CLI11.hpp>
#include <iostream>

#include "minvae/commands.hpp"
#include "minvae/common.hpp"

namespace {

struct SubState {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_config_options(CLI::App* sub, SubState& st) {
    sub->add_option("--config", st.config_path, "key=value config file");
    for (const auto& key : minvae::cli::RunConfig::known_keys()) {
        auto* opt = sub->add_option(
            "--" + key,
            [&st, key](const std::vector<std::string>& vals) {
                st.overrides.emplace_back(key, vals.back());
                return true;
            },
            "override config key '" + key + "'");
        opt->expected(1);
    }
}

minvae::cli::RunConfig build_config(const SubState& st) {
    minvae::cli::RunConfig cfg;
    if (!st.config_path.empty()) cfg.load_file(st.config_path);
    for (const auto& [k, v] : st.overrides) cfg.set(k, v);  // flags win
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MIN-VAE speech modeling and variational-EM enhancement"};
    app.require_subcommand(1);

    SubState synth_st, train_st, enhance_st, eval_st, grad_st;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    CLI::App* train = app.add_subcommand("train", "train a VAE variant on a corpus");
    CLI::App* enh = app.add_subcommand("enhance", "enhance a noisy WAV with a trained model");
    CLI::App* eval = app.add_subcommand("eval", "score enhancement over a corpus");
    CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    add_config_options(synth, synth_st);
    add_config_options(train, train_st);
    add_config_options(enh, enhance_st);
    add_config_options(eval, eval_st);
    add_config_options(grad, grad_st);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (synth->parsed()) return minvae::cli::cmd_synth(build_config(synth_st));
        if (train->parsed()) return minvae::cli::cmd_train(build_config(train_st));
        if (enh->parsed()) return minvae::cli::cmd_enhance(build_config(enhance_st));
        if (eval->parsed()) return minvae::cli::cmd_eval(build_config(eval_st));
        if (grad->parsed()) return minvae::cli::cmd_gradcheck(build_config(grad_st));
    } catch (const minvae::InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const minvae::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const minvae::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const minvae::InvalidState& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 2;
}
