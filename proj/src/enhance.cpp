#include "minvae/enhance.hpp"

#include <cmath>
#include <fstream>

#include "minvae/train.hpp"

namespace minvae::enhance {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using models::MinVae;

void EnhanceConfig::validate() const {
    if (vem_iters < 1) throw InvalidInput("EnhanceConfig: vem_iters must be >= 1");
    if (mh_burnin < 0 || mh_burnin >= mh_total)
        throw InvalidInput("EnhanceConfig: need 0 <= mh_burnin < mh_total");
    if (epsilon <= 0.0) throw InvalidInput("EnhanceConfig: epsilon must be positive");
    if (pi_init <= 0.0 || pi_init >= 1.0) throw InvalidInput("EnhanceConfig: pi_init in (0,1)");
    if (nmf_init_scale <= 0.0) throw InvalidInput("EnhanceConfig: nmf_init_scale must be positive");
}

VeS ve_s(const MinVae& model, const VectorXcd& x, const std::vector<VectorXd>& z_samples,
         const VectorXd& v, const VectorXd& wh_col) {
    if (z_samples.empty()) throw InvalidInput("ve_s: need at least one latent sample");
    if (x.size() != model.F || wh_col.size() != model.F) throw InvalidInput("ve_s: size mismatch");
    VectorXd inv_mean = VectorXd::Zero(model.F);
    for (const auto& z : z_samples)
        inv_mean += models::decode_variance(model, z, v).cwiseInverse();
    inv_mean /= static_cast<double>(z_samples.size());

    VeS out;
    out.gamma = inv_mean.cwiseInverse();
    out.m.resize(model.F);
    out.nu.resize(model.F);
    for (Eigen::Index f = 0; f < model.F; ++f) {
        double g = out.gamma(f);
        double wh = std::max(wh_col(f), kNmfFloor);
        double denom = g + wh;
        out.m(f) = g / denom * x(f);
        out.nu(f) = g * wh / denom;
    }
    return out;
}

double log_rz_unnorm(const MinVae& model, const VectorXd& z, const VectorXcd& m,
                     const VectorXd& nu, const VectorXd& v, double pi_n) {
    if ((nu.array() < 0.0).any()) throw InvalidInput("log_rz_unnorm: negative variance");
    VectorXd sigma = models::decode_variance(model, z, v);
    double acc = 0.0;
    for (Eigen::Index f = 0; f < sigma.size(); ++f) {
        double s2 = std::norm(m(f)) + nu(f);
        acc += -std::log(sigma(f)) - s2 / sigma(f);
    }
    double lp = 0.0;
    if (pi_n > 0.0) lp += pi_n * models::prior_logpdf(model.priors, z, 1);
    if (pi_n < 1.0) lp += (1.0 - pi_n) * models::prior_logpdf(model.priors, z, 0);
    return acc + lp;
}

LatentChain ve_z_mh(const MinVae& model, const VectorXcd& m, const VectorXd& nu, const VectorXd& v,
                    double pi_n, const VectorXd& z_init, const EnhanceConfig& cfg, Rng& rng) {
    if (cfg.epsilon <= 0.0) throw InvalidInput("ve_z_mh: epsilon must be positive");
    const double step = std::sqrt(cfg.epsilon);
    LatentChain chain;
    chain.epsilon = cfg.epsilon;
    chain.samples.reserve(static_cast<std::size_t>(cfg.retained()));

    VectorXd z = z_init;
    double logp = log_rz_unnorm(model, z, m, nu, v, pi_n);
    int accepted = 0;
    VectorXd cand(z.size());
    for (int t = 0; t < cfg.mh_total; ++t) {
        for (Eigen::Index i = 0; i < z.size(); ++i) cand(i) = z(i) + step * rng.normal();
        double logc = log_rz_unnorm(model, cand, m, nu, v, pi_n);
        if (mh_accept(logc - logp, rng.uniform_pos())) {
            z = cand;
            logp = logc;
            ++accepted;
        }
        if (t >= cfg.mh_burnin) chain.samples.push_back(z);
    }
    chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.mh_total);
    chain.last = z;
    return chain;
}

double ve_alpha(const MinVae& model, const std::vector<VectorXd>& z_samples, double pi) {
    if (z_samples.empty()) throw InvalidInput("ve_alpha: need at least one latent sample");
    if (pi <= 0.0 || pi >= 1.0) throw InvalidInput("ve_alpha: pi must be in (0,1)");
    double acc = 0.0;
    for (const auto& z : z_samples)
        acc += models::prior_logpdf(model.priors, z, 1) - models::prior_logpdf(model.priors, z, 0);
    acc /= static_cast<double>(z_samples.size());
    double x = acc + std::log(pi / (1.0 - pi));
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

void m_step_nmf(const MatrixXcd& x, const MatrixXcd& m, const MatrixXd& nu, MatrixXd& W,
                MatrixXd& H) {
    if ((W.array() <= 0.0).any() || (H.array() <= 0.0).any())
        throw InvalidInput("m_step_nmf: W and H must be positive");
    if (x.rows() != W.rows() || x.cols() != H.cols() || W.cols() != H.rows())
        throw InvalidInput("m_step_nmf: shape mismatch");
    const MatrixXd V = ((x - m).array().abs2() + nu.array()).matrix();

    MatrixXd WH = W * H;
    MatrixXd WH1 = WH.cwiseMax(kNmfFloor).array().inverse().matrix();         // (WH)^-1
    MatrixXd VWH2 = V.array() * WH1.array().square();                          // V .* (WH)^-2
    H = H.array() * (W.transpose() * VWH2).array() /
        (W.transpose() * WH1).array().max(kNmfFloor);
    H = H.cwiseMax(kNmfFloor);

    WH = W * H;
    WH1 = WH.cwiseMax(kNmfFloor).array().inverse().matrix();
    VWH2 = V.array() * WH1.array().square();
    W = W.array() * (VWH2 * H.transpose()).array() /
        (WH1 * H.transpose()).array().max(kNmfFloor);
    W = W.cwiseMax(kNmfFloor);
}

double update_pi_test(const VectorXd& pi_n) { return train::update_pi(pi_n); }

MatrixXcd estimate_speech(const MatrixXcd& x, const MatrixXd& gamma, const MatrixXd& wh) {
    if (x.rows() != gamma.rows() || x.cols() != gamma.cols() || x.rows() != wh.rows() ||
        x.cols() != wh.cols())
        throw InvalidInput("estimate_speech: shape mismatch");
    MatrixXcd out(x.rows(), x.cols());
    for (Eigen::Index n = 0; n < x.cols(); ++n)
        for (Eigen::Index f = 0; f < x.rows(); ++f) {
            double g = std::max(gamma(f, n), kNmfFloor);
            double b = std::max(wh(f, n), kNmfFloor);
            out(f, n) = g / (g + b) * x(f, n);
        }
    return out;
}

void write_diagnostics(const Diagnostics& d, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write diagnostics: " + path);
    f << "iter\tQ_surrogate\tmean_acceptance\tpi\n";
    f.precision(12);
    for (const auto& it : d.iters)
        f << it.iter << '\t' << it.q_surrogate << '\t' << it.mean_acceptance << '\t' << it.pi
          << '\n';
    if (!f) throw IoError("short write: " + path);
}

namespace {

// Complete-data log-likelihood surrogate (constant terms dropped): the NMF fit
// term plus the Bernoulli cross term.
double q_surrogate(const MatrixXcd& x, const SpeechPosterior& post, const MatrixXd& wh,
                   const VectorXd& pi_n, double pi) {
    double acc = 0.0;
    for (Eigen::Index n = 0; n < x.cols(); ++n)
        for (Eigen::Index f = 0; f < x.rows(); ++f) {
            double whv = std::max(wh(f, n), kNmfFloor);
            double V = std::norm(x(f, n) - post.m(f, n)) + post.nu(f, n);
            acc += -V / whv - std::log(whv);
        }
    for (Eigen::Index n = 0; n < pi_n.size(); ++n)
        acc += pi_n(n) * std::log(pi) + (1.0 - pi_n(n)) * std::log(1.0 - pi);
    return acc;
}

VectorXd initial_latent(const MinVae& model, const VectorXcd& x_col, const VectorXd& v_col,
                        EnhanceConfig::Init init) {
    VectorXd x_pow = x_col.array().abs2().matrix();
    if (init == EnhanceConfig::Init::Visual) {
        if (model.has_visual_encoder()) return models::encode_visual(model, v_col).mean;
        if (model.variant == models::Variant::AvVae)
            return models::encode_audio(model, x_pow, v_col).mean;
        throw InvalidInput("enhance: visual initialization needs a visual encoder");
    }
    if (model.variant == models::Variant::AvVae)
        return models::encode_audio(model, x_pow, v_col).mean;
    if (model.has_audio_encoder()) return models::encode_audio(model, x_pow).mean;
    return models::encode_visual(model, v_col).mean;  // v-vae has no audio path
}

}  // namespace

SpectrogramEnhanceResult enhance_spectrogram(const MinVae& model, const MatrixXcd& x,
                                             const MatrixXd& visual, const EnhanceConfig& cfg) {
    cfg.validate();
    model.validate();
    if (x.rows() != model.F) throw InvalidInput("enhance: spectrogram bin count != model F");
    const Eigen::Index N = x.cols();
    const bool needs_visual = model.decoder_sees_visual() ||
                              (cfg.init == EnhanceConfig::Init::Visual && model.has_visual_encoder()) ||
                              model.variant == models::Variant::AvVae ||
                              model.variant == models::Variant::VVae;
    if (needs_visual) {
        if (visual.rows() != model.M || visual.cols() != N)
            throw InvalidInput("enhance: visual sequence must be M x num_frames");
    }
    auto v_col = [&](Eigen::Index n) -> VectorXd {
        if (visual.cols() == N && visual.rows() == model.M) return visual.col(n);
        return VectorXd::Zero(model.M);
    };

    const int K = cfg.nmf_rank > 0 ? cfg.nmf_rank : model.nmf_rank;
    Rng init_rng(derive_seed(cfg.seed, 0x11117));

    // NMF init: random positive entries at the mixture's power scale
    double xpow_mean = x.array().abs2().mean();
    double c = cfg.nmf_init_scale * std::sqrt(std::max(xpow_mean, kNmfFloor) / (2.0 * K));
    NmfModel nmf;
    nmf.W.resize(model.F, K);
    nmf.H.resize(K, N);
    for (Eigen::Index i = 0; i < nmf.W.size(); ++i) nmf.W.data()[i] = c * (0.5 + init_rng.uniform());
    for (Eigen::Index i = 0; i < nmf.H.size(); ++i) nmf.H.data()[i] = c * (0.5 + init_rng.uniform());

    // latent init from the encoder posterior mean
    std::vector<VectorXd> z_cur(static_cast<std::size_t>(N));
    for (Eigen::Index n = 0; n < N; ++n)
        z_cur[static_cast<std::size_t>(n)] = initial_latent(model, x.col(n), v_col(n), cfg.init);

    VectorXd pi_n = VectorXd::Constant(N, cfg.pi_init);
    double pi = cfg.pi_init;

    SpeechPosterior post;
    post.m.resize(model.F, N);
    post.nu.resize(model.F, N);
    MatrixXd gamma(model.F, N);

    // initial r(s) moments from the initial latents (D = 1)
    MatrixXd wh = nmf.W * nmf.H;
    for (Eigen::Index n = 0; n < N; ++n) {
        VeS s = ve_s(model, x.col(n), {z_cur[static_cast<std::size_t>(n)]}, v_col(n), wh.col(n));
        post.m.col(n) = s.m;
        post.nu.col(n) = s.nu;
        gamma.col(n) = s.gamma;
    }

    Diagnostics diag;
    diag.iters.reserve(static_cast<std::size_t>(cfg.vem_iters));
    std::vector<std::vector<VectorXd>> retained(static_cast<std::size_t>(N));
    VectorXd acc_rates = VectorXd::Zero(N);

    for (int iter = 0; iter < cfg.vem_iters; ++iter) {
        wh = nmf.W * nmf.H;
        // per-frame VE steps; slots are disjoint so frames run in parallel
        parallel_for(N, [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
            for (std::ptrdiff_t n = lo; n < hi; ++n) {
                auto un = static_cast<std::size_t>(n);
                Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(iter) + 1,
                                    static_cast<std::uint64_t>(n), 0x2E5));
                LatentChain chain = ve_z_mh(model, post.m.col(n), post.nu.col(n), v_col(n),
                                            pi_n(n), z_cur[un], cfg, rng);
                z_cur[un] = chain.last;
                acc_rates(n) = chain.acceptance_rate;
                VeS s = ve_s(model, x.col(n), chain.samples, v_col(n), wh.col(n));
                post.m.col(n) = s.m;
                post.nu.col(n) = s.nu;
                gamma.col(n) = s.gamma;
                pi_n(n) = ve_alpha(model, chain.samples, pi);
                retained[un] = std::move(chain.samples);
            }
        });

        m_step_nmf(x, post.m, post.nu, nmf.W, nmf.H);
        pi = update_pi_test(pi_n);

        wh = nmf.W * nmf.H;
        double q = q_surrogate(x, post, wh, pi_n, pi);
        if (!std::isfinite(q) || !post.m.allFinite() || !gamma.allFinite())
            throw NumericalError("enhance: VEM state became non-finite at iteration " +
                                 std::to_string(iter));
        diag.iters.push_back({iter, q, acc_rates.mean(), pi});
    }

    SpectrogramEnhanceResult out;
    out.s_hat = estimate_speech(x, gamma, nmf.W * nmf.H);
    out.diag = std::move(diag);
    return out;
}

EnhanceResult enhance_utterance(const MinVae& model, const dsp::Waveform& noisy,
                                const MatrixXd& visual, const EnhanceConfig& cfg) {
    int window_len = cfg.window_len > 0 ? cfg.window_len : static_cast<int>(2 * (model.F - 1));
    if (window_len / 2 + 1 != model.F)
        throw InvalidInput("enhance: window_len inconsistent with model bins");
    dsp::ComplexSpectrogram X = dsp::stft(noisy, window_len, cfg.hop);
    if (visual.size() != 0 && visual.cols() != X.num_frames())
        throw InvalidInput("enhance: visual sequence length != frame count (" +
                           std::to_string(visual.cols()) + " vs " +
                           std::to_string(X.num_frames()) + ")");

    SpectrogramEnhanceResult se = enhance_spectrogram(model, X.frames, visual, cfg);

    EnhanceResult out;
    out.enhanced = X;
    out.enhanced.frames = se.s_hat;
    out.wav = dsp::istft(out.enhanced);
    out.diag = std::move(se.diag);
    return out;
}

}  // namespace minvae::enhance
