#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "minvae/checkpoint.hpp"
#include "minvae/corpus_io.hpp"
#include "minvae/enhance.hpp"
#include "minvae/evaldata.hpp"
#include "minvae/gradcheck.hpp"
#include "minvae/train.hpp"

namespace py = pybind11;
using namespace minvae;

namespace {

dsp::Waveform waveform_from(const Eigen::VectorXd& samples, int rate) {
    dsp::Waveform w;
    w.sample_rate = rate;
    w.samples.assign(samples.data(), samples.data() + samples.size());
    return w;
}

Eigen::VectorXd samples_of(const dsp::Waveform& w) {
    return Eigen::Map<const Eigen::VectorXd>(w.samples.data(),
                                             static_cast<Eigen::Index>(w.samples.size()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "MIN-VAE speech modeling and variational-EM enhancement";

    py::register_exception<InvalidInput>(m, "InvalidInputError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalErrorPy", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoErrorPy", PyExc_IOError);

    // ---- dsp ----
    m.def(
        "stft",
        [](const Eigen::VectorXd& samples, int window_len, int hop, int rate) {
            return dsp::stft(waveform_from(samples, rate), window_len, hop).frames;
        },
        py::arg("samples"), py::arg("window_len"), py::arg("hop"), py::arg("sample_rate") = 16000,
        "Complex STFT (F x N) with the sine analysis window");
    m.def(
        "istft",
        [](const Eigen::MatrixXcd& frames, int window_len, int hop, std::int64_t original_len) {
            dsp::ComplexSpectrogram spec;
            spec.frames = frames;
            spec.window_len = window_len;
            spec.hop = hop;
            spec.original_len = original_len;
            return samples_of(dsp::istft(spec));
        },
        py::arg("frames"), py::arg("window_len"), py::arg("hop"), py::arg("original_len") = 0,
        "Least-squares overlap-add inverse STFT");
    m.def(
        "power",
        [](const Eigen::MatrixXcd& frames) {
            dsp::ComplexSpectrogram spec;
            spec.frames = frames;
            return dsp::power(spec);
        },
        py::arg("frames"));

    // ---- metrics ----
    m.def(
        "si_sdr",
        [](const Eigen::VectorXd& ref, const Eigen::VectorXd& est) {
            return evaldata::si_sdr(waveform_from(ref, 16000), waveform_from(est, 16000));
        },
        py::arg("reference"), py::arg("estimate"), "Scale-invariant SDR in dB (capped at 100)");
    m.def(
        "mix_at_snr",
        [](const Eigen::VectorXd& clean, const Eigen::VectorXd& noise, double snr_db) {
            return samples_of(evaldata::mix_at_snr(waveform_from(clean, 16000),
                                                   waveform_from(noise, 16000), snr_db));
        },
        py::arg("clean"), py::arg("noise"), py::arg("snr_db"));

    // ---- variational pieces ----
    m.def("kl_gaussians", &train::kl_gaussians, py::arg("mean1"), py::arg("cov_diag1"),
          py::arg("mean2"), py::arg("cov2"),
          "KL( N(mean1, diag cov1) || N(mean2, cov2*I) )");
    m.def("kl_bernoulli", &train::kl_bernoulli, py::arg("pi_n"), py::arg("pi"));
    m.def("update_responsibility", &train::update_responsibility, py::arg("j0"), py::arg("j1"),
          py::arg("pi"));
    m.def(
        "update_pi", [](const Eigen::VectorXd& pi_n) { return train::update_pi(pi_n); },
        py::arg("pi_n"));
    m.def(
        "nmf_update",
        [](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& mpost, const Eigen::MatrixXd& nu,
           Eigen::MatrixXd W, Eigen::MatrixXd H) {
            enhance::m_step_nmf(x, mpost, nu, W, H);
            return py::make_tuple(W, H);
        },
        py::arg("x"), py::arg("m"), py::arg("nu"), py::arg("W"), py::arg("H"),
        "One multiplicative IS-NMF update of H then W; returns (W, H)");

    // ---- model / checkpoint ----
    py::class_<models::MinVae>(m, "Model")
        .def_property_readonly("variant",
                               [](const models::MinVae& mm) {
                                   return std::string(models::variant_name(mm.variant));
                               })
        .def_property_readonly("F", [](const models::MinVae& mm) { return mm.F; })
        .def_property_readonly("L", [](const models::MinVae& mm) { return mm.L; })
        .def_property_readonly("M", [](const models::MinVae& mm) { return mm.M; })
        .def_property_readonly("pi", [](const models::MinVae& mm) { return mm.priors.pi; })
        .def("decode_variance", &models::decode_variance, py::arg("z"), py::arg("v"))
        .def("encode_audio",
             [](const models::MinVae& mm, const Eigen::VectorXd& s_pow) {
                 auto e = models::encode_audio(mm, s_pow);
                 return py::make_tuple(e.mean, e.variance);
             })
        .def("encode_visual", [](const models::MinVae& mm, const Eigen::VectorXd& v) {
            auto e = models::encode_visual(mm, v);
            return py::make_tuple(e.mean, e.variance);
        });
    m.def("load_checkpoint", &io::load_checkpoint, py::arg("path"));
    m.def("save_checkpoint", &io::save_checkpoint, py::arg("model"), py::arg("path"));

    // ---- pipeline ----
    m.def(
        "train_toy_model",
        [](const std::string& manifest, const std::string& variant, int epochs, int batch_size,
           double lr, int hidden_enc, int hidden_dec, std::uint64_t seed, bool noise_injection) {
            evaldata::ToyCorpus corpus = io::load_corpus(manifest);
            models::ModelArch arch{hidden_enc, hidden_dec};
            Rng rng(derive_seed(seed, 0x30DE1));
            models::Variant var = models::variant_from_name(variant);
            models::MinVae model = models::make_model(var, corpus.spec.F_toy, corpus.spec.L_toy,
                                                      corpus.spec.M_toy, arch, rng);
            train::TrainConfig tc;
            tc.epochs = epochs;
            tc.batch_size = batch_size;
            tc.learning_rate = lr;
            tc.seed = seed;
            tc.noise_injection.enabled = noise_injection;
            tc.train_priors =
                var != models::Variant::AVae && var != models::Variant::VVae;
            train::Corpus data = corpus.pooled_training();
            train::TrainLog log = train::train_model(model, data, tc);
            py::list rows;
            for (const auto& e : log)
                rows.append(py::make_tuple(e.epoch, e.mean_loss, e.pi, e.mean_pi_n));
            return py::make_tuple(model, rows);
        },
        py::arg("manifest"), py::arg("variant") = "min-v2", py::arg("epochs") = 50,
        py::arg("batch_size") = 128, py::arg("learning_rate") = 1e-4, py::arg("hidden_enc") = 0,
        py::arg("hidden_dec") = 0, py::arg("seed") = 0, py::arg("noise_injection") = false);
    m.def(
        "enhance",
        [](const models::MinVae& model, const Eigen::VectorXd& noisy,
           const Eigen::MatrixXd& visual, int vem_iters, int mh_total, int mh_burnin,
           double epsilon, std::uint64_t seed, int window_len, int hop,
           const std::string& init_mode) {
            enhance::EnhanceConfig cfg;
            cfg.vem_iters = vem_iters;
            cfg.mh_total = mh_total;
            cfg.mh_burnin = mh_burnin;
            cfg.epsilon = epsilon;
            cfg.seed = seed;
            cfg.window_len = window_len;
            cfg.hop = hop;
            cfg.init = init_mode == "audio" ? enhance::EnhanceConfig::Init::Audio
                                            : enhance::EnhanceConfig::Init::Visual;
            auto res = enhance::enhance_utterance(model, waveform_from(noisy, 16000), visual, cfg);
            return samples_of(res.wav);
        },
        py::arg("model"), py::arg("noisy"), py::arg("visual"), py::arg("vem_iters") = 100,
        py::arg("mh_total") = 40, py::arg("mh_burnin") = 30, py::arg("epsilon") = 0.01,
        py::arg("seed") = 0, py::arg("window_len") = 0, py::arg("hop") = 533,
        py::arg("init_mode") = "visual");
    m.def(
        "generate_toy_corpus",
        [](const std::string& out_dir, int n_utterances, int frames, int F, int L, int M,
           double informativeness, std::uint64_t seed) {
            evaldata::ToyCorpusSpec spec;
            spec.n_utterances = n_utterances;
            spec.frames_per_utterance = frames;
            spec.F_toy = F;
            spec.L_toy = L;
            spec.M_toy = M;
            spec.visual_informativeness = informativeness;
            spec.seed = seed;
            return io::write_corpus(evaldata::generate_toy_corpus(spec), out_dir);
        },
        py::arg("out_dir"), py::arg("n_utterances") = 8, py::arg("frames") = 30,
        py::arg("F") = 64, py::arg("L") = 8, py::arg("M") = 8,
        py::arg("informativeness") = 0.95, py::arg("seed") = 0,
        "Writes a synthetic corpus and returns the manifest path");
    m.def(
        "gradcheck",
        [](const std::vector<std::string>& suites, std::uint64_t seed) {
            py::list out;
            for (const auto& r : gradcheck::run_suites(suites, seed))
                out.append(py::make_tuple(r.name, r.pass, r.max_err));
            return out;
        },
        py::arg("suites"), py::arg("seed") = 0);
}
