#include "minvae/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "minvae/checkpoint.hpp"
#include "minvae/corpus_io.hpp"
#include "minvae/gradcheck.hpp"
#include "minvae/wav.hpp"

namespace minvae::cli {

namespace fs = std::filesystem;
using models::MinVae;
using models::Variant;

namespace {

std::string prep_out_dir(const RunConfig& cfg) {
    std::string out = cfg.get_str("out", ".");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory: " + out);
    return out;
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::is_regular_file(path)) throw IoError(what + " not found: " + path);
}

void apply_threads(const RunConfig& cfg) {
    set_max_threads(static_cast<int>(cfg.get_int("threads", 0)));
}

evaldata::ToyCorpusSpec corpus_spec_from(const RunConfig& cfg) {
    evaldata::ToyCorpusSpec spec;
    spec.n_utterances = static_cast<int>(cfg.get_int("n_utterances", spec.n_utterances));
    spec.frames_per_utterance =
        static_cast<int>(cfg.get_int("frames_per_utterance", spec.frames_per_utterance));
    spec.F_toy = static_cast<int>(cfg.get_int("f_bins", spec.F_toy));
    spec.L_toy = static_cast<int>(cfg.get_int("latent_dim", spec.L_toy));
    spec.M_toy = static_cast<int>(cfg.get_int("visual_dim", spec.M_toy));
    spec.visual_informativeness = cfg.get_double("informativeness", spec.visual_informativeness);
    spec.seed = cfg.get_u64("seed", 0);
    spec.validate();
    return spec;
}

train::TrainConfig train_config_from(const RunConfig& cfg, Variant variant) {
    train::TrainConfig tc;
    tc.epochs = static_cast<int>(cfg.get_int("epochs", 100));
    tc.batch_size = static_cast<int>(cfg.get_int("batch_size", 128));
    tc.learning_rate = cfg.get_double("learning_rate", 1e-4);
    tc.seed = cfg.get_u64("seed", 0);
    tc.noise_injection.enabled = cfg.get_bool("noise_injection", false);
    tc.noise_injection.fraction = cfg.get_double("noise_fraction", 1.0 / 3.0);
    tc.noise_injection.snr_db = cfg.get_double("noise_snr_db", 0.0);
    // a-vae / v-vae keep the standard-normal prior of the base generative model
    tc.train_priors = variant != Variant::AVae && variant != Variant::VVae;
    if (tc.epochs < 1) throw InvalidInput("epochs must be >= 1");
    if (tc.batch_size < 1) throw InvalidInput("batch_size must be >= 1");
    return tc;
}

enhance::EnhanceConfig enhance_config_from(const RunConfig& cfg, const MinVae& model) {
    enhance::EnhanceConfig ec;
    ec.vem_iters = static_cast<int>(cfg.get_int("vem_iters", ec.vem_iters));
    ec.mh_total = static_cast<int>(cfg.get_int("mh_total", ec.mh_total));
    ec.mh_burnin = static_cast<int>(cfg.get_int("mh_burnin", ec.mh_burnin));
    ec.epsilon = cfg.get_double("epsilon", ec.epsilon);
    ec.seed = cfg.get_u64("seed", 0);
    ec.nmf_rank = static_cast<int>(cfg.get_int("nmf_rank", 0));
    ec.nmf_init_scale = cfg.get_double("nmf_init_scale", 1.0);
    ec.pi_init = cfg.get_double("pi_init", 0.5);
    const std::string init = cfg.get_str("init_mode", "visual");
    if (init == "visual")
        ec.init = enhance::EnhanceConfig::Init::Visual;
    else if (init == "audio")
        ec.init = enhance::EnhanceConfig::Init::Audio;
    else
        throw InvalidInput("init_mode must be 'visual' or 'audio', got '" + init + "'");
    int window = static_cast<int>(cfg.get_int("window_len", 0));
    ec.window_len = window > 0 ? window : static_cast<int>(2 * (model.F - 1));
    // the 16 kHz / 513-bin geometry pairs with hop 533; otherwise half-window
    ec.hop = static_cast<int>(cfg.get_int("hop", ec.window_len == 1024 ? 533 : ec.window_len / 2));
    ec.validate();
    return ec;
}

Eigen::MatrixXd load_features(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open feature file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string data = ss.str();
    const std::string magic = "MINFEAT1\n";
    if (data.compare(0, magic.size(), magic) != 0)
        throw IoError("feature file is not MINFEAT1: " + path);
    std::size_t nl = data.find('\n', magic.size());
    std::istringstream hs(data.substr(magic.size(), nl - magic.size()));
    Eigen::Index rows = 0, cols = 0;
    if (!(hs >> rows >> cols)) throw IoError("feature file header malformed: " + path);
    Eigen::MatrixXd m(rows, cols);
    std::size_t pos = nl + 1;
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) {
            if (pos + 8 > data.size()) throw IoError("feature file truncated: " + path);
            std::uint64_t bits;
            std::memcpy(&bits, data.data() + pos, 8);
            pos += 8;
            double x;
            std::memcpy(&x, &bits, 8);
            m(r, c) = x;
        }
    return m;
}

}  // namespace

int cmd_synth(const RunConfig& cfg) {
    apply_threads(cfg);
    const std::string out = prep_out_dir(cfg);
    evaldata::ToyCorpus corpus = evaldata::generate_toy_corpus(corpus_spec_from(cfg));
    const std::string manifest = io::write_corpus(corpus, out);
    std::cout << "wrote " << corpus.utterances.size() << " utterances, manifest " << manifest
              << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    apply_threads(cfg);
    const std::string out = prep_out_dir(cfg);
    const std::string manifest = cfg.require("corpus");
    require_file(manifest, "corpus manifest");

    const Variant variant = models::variant_from_name(cfg.get_str("variant", "min-v2"));
    evaldata::ToyCorpus corpus = io::load_corpus(manifest);
    train::Corpus data = corpus.pooled_training();

    const std::string ckpt_path = (fs::path(out) / "model.ckpt").string();
    const std::string state_path = ckpt_path + ".state";
    const std::string log_path = (fs::path(out) / "train.log").string();

    train::TrainConfig tc = train_config_from(cfg, variant);
    MinVae model;
    nn::AdamState adam;
    bool resume = cfg.get_bool("resume", false);
    if (resume) {
        require_file(ckpt_path, "checkpoint to resume");
        model = io::load_checkpoint(ckpt_path);
        if (model.variant != variant)
            throw InvalidInput("resume: checkpoint variant " +
                               std::string(models::variant_name(model.variant)) +
                               " does not match requested " + models::variant_name(variant));
        io::TrainState st = io::load_train_state(state_path, model);
        adam = std::move(st.adam);
        tc.start_epoch = st.epochs_done;
        if (tc.start_epoch >= tc.epochs)
            throw InvalidInput("resume: checkpoint already has " +
                               std::to_string(tc.start_epoch) + " epochs; raise epochs");
    } else {
        models::ModelArch arch;
        arch.hidden_encoder = static_cast<int>(cfg.get_int("hidden_enc", 128));
        arch.hidden_decoder = static_cast<int>(cfg.get_int("hidden_dec", 128));
        Rng rng(derive_seed(tc.seed, 0x30DE1));
        model = models::make_model(variant, corpus.spec.F_toy, cfg.get_int("latent_dim", 8),
                                   corpus.spec.M_toy, arch, rng,
                                   static_cast<int>(cfg.get_int("nmf_rank", 10)));
        // optional warm starts from pretrained checkpoints
        if (cfg.has("init_decoder_from")) {
            MinVae src = io::load_checkpoint(cfg.get_str("init_decoder_from"));
            if (src.decoder.input_dim() != model.decoder.input_dim() ||
                src.decoder.output_dim() != model.decoder.output_dim())
                throw InvalidInput("init_decoder_from: decoder shape mismatch");
            model.decoder = src.decoder;
        }
        if (cfg.has("init_audio_enc_from")) {
            MinVae src = io::load_checkpoint(cfg.get_str("init_audio_enc_from"));
            if (!src.has_audio_encoder() ||
                src.audio_encoder.input_dim() != model.audio_encoder.input_dim())
                throw InvalidInput("init_audio_enc_from: encoder shape mismatch");
            model.audio_encoder = src.audio_encoder;
        }
        if (cfg.has("init_visual_enc_from")) {
            MinVae src = io::load_checkpoint(cfg.get_str("init_visual_enc_from"));
            if (!src.has_visual_encoder() ||
                src.visual_encoder.input_dim() != model.visual_encoder.input_dim())
                throw InvalidInput("init_visual_enc_from: encoder shape mismatch");
            model.visual_encoder = src.visual_encoder;
        }
        adam = nn::make_adam(train::model_param_views(model), tc.learning_rate);
    }

    train::TrainLog log;
    try {
        log = train::train_model(model, data, tc, &adam);
    } catch (const NumericalError&) {
        // keep the last good state for post-mortem work, then re-signal
        io::save_checkpoint(model, ckpt_path);
        throw;
    }

    io::save_checkpoint(model, ckpt_path);
    io::TrainState st;
    st.epochs_done = tc.epochs;
    st.adam = std::move(adam);
    io::save_train_state(st, state_path);

    if (resume) {
        std::ofstream f(log_path, std::ios::app);
        if (!f) throw IoError("cannot append training log: " + log_path);
        f.precision(12);
        for (const auto& e : log)
            f << e.epoch << '\t' << e.mean_loss << '\t' << e.pi << '\t' << e.mean_pi_n << '\t'
              << e.wall_seconds << '\n';
    } else {
        train::write_train_log(log, log_path);
    }
    std::cout << "checkpoint " << ckpt_path << "\n";
    return 0;
}

int cmd_enhance(const RunConfig& cfg) {
    apply_threads(cfg);
    const std::string out = prep_out_dir(cfg);
    const std::string ckpt = cfg.require("checkpoint");
    require_file(ckpt, "checkpoint");
    const std::string input = cfg.require("input");
    require_file(input, "input WAV");

    MinVae model = io::load_checkpoint(ckpt);
    enhance::EnhanceConfig ec = enhance_config_from(cfg, model);

    Eigen::MatrixXd visual;
    const bool needs_visual =
        model.decoder_sees_visual() || model.variant == Variant::VVae ||
        model.variant == Variant::AvVae ||
        (ec.init == enhance::EnhanceConfig::Init::Visual && model.has_visual_encoder());
    if (cfg.has("features")) {
        require_file(cfg.get_str("features"), "feature file");
        visual = load_features(cfg.get_str("features"));
    } else if (needs_visual) {
        throw InvalidInput("variant " + std::string(models::variant_name(model.variant)) +
                           " needs a visual feature file (features=...)");
    }

    dsp::Waveform noisy = wav::read(input);
    enhance::EnhanceResult res = enhance::enhance_utterance(model, noisy, visual, ec);

    const std::string wav_path = (fs::path(out) / "enhanced.wav").string();
    const std::string diag_path = (fs::path(out) / "diagnostics.tsv").string();
    wav::write(wav_path, res.wav);
    enhance::write_diagnostics(res.diag, diag_path);
    std::cout << "enhanced " << wav_path << " (" << res.wav.samples.size() << " samples)\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg) {
    apply_threads(cfg);
    const std::string out = prep_out_dir(cfg);
    const std::string manifest = cfg.require("corpus");
    require_file(manifest, "corpus manifest");
    const std::string ckpt = cfg.require("checkpoint");
    require_file(ckpt, "checkpoint");

    evaldata::ToyCorpus corpus = io::load_corpus(manifest);
    MinVae model = io::load_checkpoint(ckpt);
    enhance::EnhanceConfig ec = enhance_config_from(cfg, model);
    std::vector<double> snrs = cfg.get_double_list("snr_levels", {0.0});
    const std::uint64_t mix_seed = cfg.get_u64("seed", 0);

    evaldata::ScoreReport report =
        evaldata::evaluate(&model, corpus, snrs, ec, evaldata::EnhancerKind::Model, mix_seed);
    const std::string report_path = (fs::path(out) / "report.tsv").string();
    evaldata::write_score_report(report, report_path);

    if (cfg.get_bool("oracle", false)) {
        evaldata::ScoreReport oracle = evaldata::evaluate(
            nullptr, corpus, snrs, ec, evaldata::EnhancerKind::OracleWiener, mix_seed);
        oracle.items.clear();  // upper-bound rows only
        evaldata::write_score_report(oracle, report_path, /*append=*/true);
    }

    for (const auto& a : report.aggregates)
        std::cout << "snr " << a.snr_db << " dB: mean delta " << a.mean_delta << " dB over "
                  << a.count << " utterances\n";
    std::cout << "report " << report_path << "\n";
    return 0;
}

int cmd_gradcheck(const RunConfig& cfg) {
    apply_threads(cfg);
    std::vector<std::string> suites = gradcheck::known_suites();
    if (cfg.has("suites")) {
        suites.clear();
        std::stringstream ss(cfg.get_str("suites"));
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) suites.push_back(tok);
    }
    auto results = gradcheck::run_suites(suites, cfg.get_u64("seed", 0));
    bool all_pass = true;
    for (const auto& r : results) {
        std::cout << "gradcheck " << r.name << ": " << (r.pass ? "PASS" : "FAIL")
                  << " (max_err=" << r.max_err << ", " << r.detail << ")\n";
        all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 4;
}

}  // namespace minvae::cli
