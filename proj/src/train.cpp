#include "minvae/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace minvae::train {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using models::kVarFloor;
using models::MinVae;
using models::Variant;

void write_train_log(const TrainLog& log, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write training log: " + path);
    f << "epoch\tmean_loss\tpi\tmean_pi_n\twall_seconds\n";
    f.precision(12);
    for (const auto& e : log)
        f << e.epoch << '\t' << e.mean_loss << '\t' << e.pi << '\t' << e.mean_pi_n << '\t'
          << e.wall_seconds << '\n';
    if (!f) throw IoError("short write: " + path);
}

ModelGrads ModelGrads::zeros_like(const MinVae& m) {
    ModelGrads g;
    g.audio_enc = nn::MlpGrads::zeros_like(m.audio_encoder);
    g.visual_enc = nn::MlpGrads::zeros_like(m.visual_encoder);
    g.decoder = nn::MlpGrads::zeros_like(m.decoder);
    g.prior_net = nn::MlpGrads::zeros_like(m.prior_net);
    g.d_mu_a = VectorXd::Zero(m.priors.mu_a.size());
    g.d_mu_v = VectorXd::Zero(m.priors.mu_v.size());
    g.d_log_sigma_a = 0.0;
    g.d_log_sigma_v = 0.0;
    return g;
}

void ModelGrads::set_zero() {
    audio_enc.set_zero();
    visual_enc.set_zero();
    decoder.set_zero();
    prior_net.set_zero();
    d_mu_a.setZero();
    d_mu_v.setZero();
    d_log_sigma_a = 0.0;
    d_log_sigma_v = 0.0;
}

namespace {

void scale_grads(ModelGrads& g, double s) {
    for (auto& lg : g.audio_enc.layers) {
        lg.dW *= s;
        lg.db *= s;
    }
    for (auto& lg : g.visual_enc.layers) {
        lg.dW *= s;
        lg.db *= s;
    }
    for (auto& lg : g.decoder.layers) {
        lg.dW *= s;
        lg.db *= s;
    }
    for (auto& lg : g.prior_net.layers) {
        lg.dW *= s;
        lg.db *= s;
    }
    g.d_mu_a *= s;
    g.d_mu_v *= s;
    g.d_log_sigma_a *= s;
    g.d_log_sigma_v *= s;
}

}  // namespace

std::vector<nn::ParamView> model_param_views(MinVae& m, std::vector<BlockGroup>* groups) {
    std::vector<nn::ParamView> out;
    if (groups != nullptr) groups->clear();
    auto push_net = [&](nn::Mlp& net, BlockGroup g) {
        for (auto v : nn::param_views(net)) {
            out.push_back(v);
            if (groups != nullptr) groups->push_back(g);
        }
    };
    push_net(m.audio_encoder, BlockGroup::AudioEnc);
    push_net(m.visual_encoder, BlockGroup::VisualEnc);
    push_net(m.decoder, BlockGroup::Decoder);
    push_net(m.prior_net, BlockGroup::PriorNet);
    auto push_prior = [&](double* p, Eigen::Index n) {
        out.push_back({p, n});
        if (groups != nullptr) groups->push_back(BlockGroup::Priors);
    };
    push_prior(m.priors.mu_a.data(), m.priors.mu_a.size());
    push_prior(&m.priors.log_sigma_a, 1);
    push_prior(m.priors.mu_v.data(), m.priors.mu_v.size());
    push_prior(&m.priors.log_sigma_v, 1);
    return out;
}

std::vector<nn::ConstParamView> model_grad_views(const ModelGrads& g, const MinVae&) {
    std::vector<nn::ConstParamView> out;
    auto push_net = [&](const nn::MlpGrads& gr) {
        for (auto v : nn::grad_views(gr)) out.push_back(v);
    };
    push_net(g.audio_enc);
    push_net(g.visual_enc);
    push_net(g.decoder);
    push_net(g.prior_net);
    out.push_back({g.d_mu_a.data(), g.d_mu_a.size()});
    out.push_back({&g.d_log_sigma_a, 1});
    out.push_back({g.d_mu_v.data(), g.d_mu_v.size()});
    out.push_back({&g.d_log_sigma_v, 1});
    return out;
}

double kl_gaussians(const VectorXd& mean1, const VectorXd& cov_diag1, const VectorXd& mean2,
                    double cov2) {
    if (mean1.size() != cov_diag1.size() || mean1.size() != mean2.size())
        throw InvalidInput("kl_gaussians: size mismatch");
    if (cov2 <= 0.0 || (cov_diag1.array() <= 0.0).any())
        throw InvalidInput("kl_gaussians: variances must be positive");
    const auto L = static_cast<double>(mean1.size());
    return 0.5 * (L * std::log(cov2) - cov_diag1.array().log().sum() - L +
                  cov_diag1.sum() / cov2 + (mean1 - mean2).squaredNorm() / cov2);
}

double kl_gaussians_diag(const VectorXd& mean1, const VectorXd& cov1, const VectorXd& mean2,
                         const VectorXd& cov2) {
    if (mean1.size() != cov1.size() || mean1.size() != mean2.size() || mean1.size() != cov2.size())
        throw InvalidInput("kl_gaussians_diag: size mismatch");
    if ((cov1.array() <= 0.0).any() || (cov2.array() <= 0.0).any())
        throw InvalidInput("kl_gaussians_diag: variances must be positive");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < mean1.size(); ++i) {
        double d = mean1(i) - mean2(i);
        acc += 0.5 * (std::log(cov2(i) / cov1(i)) - 1.0 + cov1(i) / cov2(i) + d * d / cov2(i));
    }
    return acc;
}

double kl_bernoulli(double pi_n, double pi) {
    if (pi <= 0.0 || pi >= 1.0) throw InvalidInput("kl_bernoulli: pi must be in (0,1)");
    if (pi_n < 0.0 || pi_n > 1.0) throw InvalidInput("kl_bernoulli: pi_n must be in [0,1]");
    double acc = 0.0;
    if (pi_n > 0.0) acc += pi_n * std::log(pi_n / pi);
    if (pi_n < 1.0) acc += (1.0 - pi_n) * std::log((1.0 - pi_n) / (1.0 - pi));
    return acc;
}

namespace {

struct EncoderPass {
    nn::MlpCache cache;
    VectorXd mean;
    VectorXd variance;
    VectorXd raw;
};

EncoderPass run_encoder(const nn::Mlp& enc, const VectorXd& input) {
    EncoderPass p;
    p.raw = nn::forward(enc, input, &p.cache);
    auto split = models::split_encoder_output(p.raw);
    p.mean = std::move(split.mean);
    p.variance = std::move(split.variance);
    return p;
}

// d(variance)/d(log-variance head), zero where the floor clamps
VectorXd variance_logvar_grad(const EncoderPass& p) {
    const Eigen::Index L = p.mean.size();
    VectorXd g(L);
    for (Eigen::Index i = 0; i < L; ++i)
        g(i) = std::exp(p.raw(L + i)) > kVarFloor ? p.variance(i) : 0.0;
    return g;
}

struct ReconPass {
    nn::MlpCache cache;
    VectorXd sigma_raw;
    VectorXd sigma;
    double loglik = 0.0;
};

ReconPass run_decoder_recon(const MinVae& m, const VectorXd& z, const VectorXd& v,
                            const VectorXd& target_pow) {
    ReconPass r;
    if (m.decoder_sees_visual()) {
        VectorXd in(m.L + m.M);
        in << z, v;
        r.sigma_raw = nn::forward(m.decoder, in, &r.cache);
    } else {
        r.sigma_raw = nn::forward(m.decoder, z, &r.cache);
    }
    r.sigma = r.sigma_raw.array().max(kVarFloor);
    r.loglik = models::loglik_complex_gaussian_pow(target_pow, r.sigma);
    return r;
}

// Backprop of weight * (-loglik) through the decoder; returns the z part of
// the (weighted) input gradient.
VectorXd recon_backward(const MinVae& m, const ReconPass& r, const VectorXd& target_pow,
                        nn::MlpGrads& dec_grads, double weight) {
    VectorXd go(r.sigma.size());
    for (Eigen::Index f = 0; f < r.sigma.size(); ++f) {
        double s = r.sigma(f);
        double g = 1.0 / s - target_pow(f) / (s * s);
        go(f) = (r.sigma_raw(f) > kVarFloor ? g : 0.0) * weight;
    }
    VectorXd gin = nn::backward(m.decoder, r.cache, go, dec_grads);
    return gin.head(m.L);
}

const nn::Mlp& branch_encoder(const MinVae& m, Branch b) {
    if (b == Branch::Audio) {
        if (!m.has_audio_encoder()) throw InvalidInput("branch: no audio encoder");
        return m.audio_encoder;
    }
    if (!m.has_visual_encoder()) throw InvalidInput("branch: no visual encoder");
    return m.visual_encoder;
}

// Core single-branch negative ELBO. enc_pow feeds the audio encoder (it may
// carry injected noise); target_pow is always the clean frame power.
ElboResult elbo_branch_full(const MinVae& m, const VectorXd& enc_pow, const VectorXd& target_pow,
                            const VectorXd& v, Branch branch, const VectorXd& noise,
                            ModelGrads* grads, double weight) {
    if (target_pow.size() != m.F) throw InvalidInput("elbo: power frame size mismatch");
    if (noise.size() != m.L) throw InvalidInput("elbo: noise size mismatch");
    const bool audio = branch == Branch::Audio;
    if (audio && enc_pow.size() != m.F) throw InvalidInput("elbo: encoder input size mismatch");
    if (!audio && v.size() != m.M) throw InvalidInput("elbo: visual input size mismatch");

    EncoderPass enc = run_encoder(branch_encoder(m, branch), audio ? enc_pow : v);
    const VectorXd& mu_p = audio ? m.priors.mu_a : m.priors.mu_v;
    const double sig_p = audio ? m.priors.sigma_a() : m.priors.sigma_v();

    VectorXd z = nn::reparam_with_noise(enc.mean, enc.variance, noise);
    ReconPass rec = run_decoder_recon(m, z, v, target_pow);
    const double kl = kl_gaussians(enc.mean, enc.variance, mu_p, sig_p);

    ElboResult res;
    res.recon = rec.loglik;
    res.kl = kl;
    res.loss = -rec.loglik + kl;

    if (grads != nullptr && weight != 0.0) {
        VectorXd gz = recon_backward(m, rec, target_pow, grads->decoder, weight);

        VectorXd enc_go(2 * m.L);
        VectorXd lvg = variance_logvar_grad(enc);
        for (Eigen::Index i = 0; i < m.L; ++i) {
            enc_go(i) = gz(i) + weight * (enc.mean(i) - mu_p(i)) / sig_p;
            double gv = gz(i) * noise(i) / (2.0 * std::sqrt(enc.variance(i))) +
                        weight * 0.5 * (1.0 / sig_p - 1.0 / enc.variance(i));
            enc_go(m.L + i) = gv * lvg(i);
        }
        nn::backward(branch_encoder(m, branch), enc.cache, enc_go,
                     audio ? grads->audio_enc : grads->visual_enc);

        VectorXd dmup = -weight * (enc.mean - mu_p) / sig_p;
        double dsig = weight * 0.5 *
                      (static_cast<double>(m.L) / sig_p - enc.variance.sum() / (sig_p * sig_p) -
                       (enc.mean - mu_p).squaredNorm() / (sig_p * sig_p));
        double log_sig = audio ? m.priors.log_sigma_a : m.priors.log_sigma_v;
        double dlogsig = std::exp(log_sig) > kVarFloor ? dsig * sig_p : 0.0;
        if (audio) {
            grads->d_mu_a += dmup;
            grads->d_log_sigma_a += dlogsig;
        } else {
            grads->d_mu_v += dmup;
            grads->d_log_sigma_v += dlogsig;
        }
    }
    return res;
}

ElboResult elbo_av_full(const MinVae& m, const VectorXd& enc_pow, const VectorXd& target_pow,
                        const VectorXd& v, const VectorXd& noise, ModelGrads* grads,
                        double weight) {
    if (m.variant != Variant::AvVae) throw InvalidInput("elbo_av: model is not av-vae");
    if (enc_pow.size() != m.F || target_pow.size() != m.F || v.size() != m.M)
        throw InvalidInput("elbo_av: input size mismatch");
    VectorXd enc_in(m.F + m.M);
    enc_in << enc_pow, v;
    EncoderPass enc = run_encoder(m.audio_encoder, enc_in);
    EncoderPass pri = run_encoder(m.prior_net, v);

    VectorXd z = nn::reparam_with_noise(enc.mean, enc.variance, noise);
    ReconPass rec = run_decoder_recon(m, z, v, target_pow);
    const double kl = kl_gaussians_diag(enc.mean, enc.variance, pri.mean, pri.variance);

    ElboResult res;
    res.recon = rec.loglik;
    res.kl = kl;
    res.loss = -rec.loglik + kl;

    if (grads != nullptr && weight != 0.0) {
        VectorXd gz = recon_backward(m, rec, target_pow, grads->decoder, weight);

        VectorXd enc_go(2 * m.L), pri_go(2 * m.L);
        VectorXd enc_lvg = variance_logvar_grad(enc);
        VectorXd pri_lvg = variance_logvar_grad(pri);
        for (Eigen::Index i = 0; i < m.L; ++i) {
            double d = enc.mean(i) - pri.mean(i);
            double cq = enc.variance(i), cp = pri.variance(i);
            enc_go(i) = gz(i) + weight * d / cp;
            double gv = gz(i) * noise(i) / (2.0 * std::sqrt(cq)) +
                        weight * 0.5 * (1.0 / cp - 1.0 / cq);
            enc_go(m.L + i) = gv * enc_lvg(i);
            pri_go(i) = -weight * d / cp;
            double gpv = weight * 0.5 * (1.0 / cp - cq / (cp * cp) - d * d / (cp * cp));
            pri_go(m.L + i) = gpv * pri_lvg(i);
        }
        nn::backward(m.audio_encoder, enc.cache, enc_go, grads->audio_enc);
        nn::backward(m.prior_net, pri.cache, pri_go, grads->prior_net);
    }
    return res;
}

double j_tilde_full(const MinVae& m, const VectorXd& enc_pow, const VectorXd& target_pow,
                    const VectorXd& v, int alpha, Rng& rng) {
    VectorXd noise(m.L);
    for (Eigen::Index i = 0; i < m.L; ++i) noise(i) = rng.normal();
    Branch b = alpha != 0 ? Branch::Audio : Branch::Visual;
    return elbo_branch_full(m, enc_pow, target_pow, v, b, noise, nullptr, 0.0).loss;
}

// Both J~ values with a common reparameterization draw: a symmetric model
// then yields exactly equal terms (variance reduction for the pi_n update).
std::pair<double, double> j_tilde_pair(const MinVae& m, const VectorXd& enc_pow,
                                       const VectorXd& target_pow, const VectorXd& v, Rng& rng) {
    VectorXd noise(m.L);
    for (Eigen::Index i = 0; i < m.L; ++i) noise(i) = rng.normal();
    double j0 = elbo_branch_full(m, enc_pow, target_pow, v, Branch::Visual, noise, nullptr, 0.0).loss;
    double j1 = elbo_branch_full(m, enc_pow, target_pow, v, Branch::Audio, noise, nullptr, 0.0).loss;
    return {j0, j1};
}

double minvae_frame_loss_full(const MinVae& m, const VectorXd& enc_pow, const VectorXd& target_pow,
                              const VectorXd& v, double pi_n, const VectorXd& noise_audio,
                              const VectorXd& noise_visual, ModelGrads* grads) {
    ElboResult ja =
        elbo_branch_full(m, enc_pow, target_pow, v, Branch::Audio, noise_audio, grads, pi_n);
    ElboResult jv = elbo_branch_full(m, enc_pow, target_pow, v, Branch::Visual, noise_visual,
                                     grads, 1.0 - pi_n);
    return pi_n * ja.loss + (1.0 - pi_n) * jv.loss + kl_bernoulli(pi_n, m.priors.pi);
}

}  // namespace

ElboResult elbo_branch_with_noise(const MinVae& m, const VectorXd& s_pow, const VectorXd& v,
                                  Branch branch, const VectorXd& noise, ModelGrads* grads,
                                  double weight) {
    return elbo_branch_full(m, s_pow, s_pow, v, branch, noise, grads, weight);
}

ElboResult elbo_av_with_noise(const MinVae& m, const VectorXd& s_pow, const VectorXd& v,
                              const VectorXd& noise, ModelGrads* grads, double weight) {
    return elbo_av_full(m, s_pow, s_pow, v, noise, grads, weight);
}

ElboResult elbo_standard(const MinVae& m, const VectorXd& s_pow, const VectorXd& v, Rng& rng,
                         ModelGrads* grads) {
    VectorXd noise(m.L);
    for (Eigen::Index i = 0; i < m.L; ++i) noise(i) = rng.normal();
    switch (m.variant) {
        case Variant::AVae:
            return elbo_branch_with_noise(m, s_pow, v, Branch::Audio, noise, grads);
        case Variant::VVae:
            return elbo_branch_with_noise(m, s_pow, v, Branch::Visual, noise, grads);
        case Variant::AvVae:
            return elbo_av_with_noise(m, s_pow, v, noise, grads);
        default:
            throw InvalidInput("elbo_standard: min-* variants train via the minvae loss");
    }
}

double j_tilde(const MinVae& m, const VectorXd& s_pow, const VectorXd& v, int alpha, Rng& rng) {
    return j_tilde_full(m, s_pow, s_pow, v, alpha, rng);
}

double update_responsibility(double j0, double j1, double pi) {
    if (pi <= 0.0 || pi >= 1.0) throw InvalidInput("update_responsibility: pi must be in (0,1)");
    double x = j0 - j1 + std::log(pi / (1.0 - pi));
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double minvae_frame_loss_with_noise(const MinVae& m, const VectorXd& s_pow, const VectorXd& v,
                                    double pi_n, const VectorXd& noise_audio,
                                    const VectorXd& noise_visual, ModelGrads* grads) {
    return minvae_frame_loss_full(m, s_pow, s_pow, v, pi_n, noise_audio, noise_visual, grads);
}

double update_pi(const VectorXd& pi_n) {
    if (pi_n.size() == 0) throw InvalidInput("update_pi: empty responsibilities");
    return std::clamp(pi_n.mean(), 1e-4, 1.0 - 1e-4);
}

MatrixXd augment_audio_input(const MatrixXcd& frames, const NoiseInjection& cfg, Rng& rng,
                             MatrixXcd* injected) {
    if (cfg.fraction < 0.0 || cfg.fraction > 1.0)
        throw InvalidInput("augment_audio_input: fraction must be in [0,1]");
    MatrixXd pow = frames.array().abs2().matrix();
    if (injected != nullptr) *injected = MatrixXcd::Zero(frames.rows(), frames.cols());
    if (!cfg.enabled || cfg.fraction == 0.0) return pow;
    const Eigen::Index F = frames.rows();
    const double snr_lin = std::pow(10.0, cfg.snr_db / 10.0);
    for (Eigen::Index n = 0; n < frames.cols(); ++n) {
        if (rng.uniform() >= cfg.fraction) continue;
        double sig_pow = pow.col(n).sum();
        if (sig_pow <= 0.0) continue;
        Eigen::VectorXcd noise(F);
        double npow = 0.0;
        for (Eigen::Index f = 0; f < F; ++f) {
            double re = 2.0 * rng.uniform() - 1.0;
            double im = 2.0 * rng.uniform() - 1.0;
            noise(f) = std::complex<double>(re, im);
            npow += re * re + im * im;
        }
        if (npow <= 0.0) continue;
        // rescale so the injected frame SNR is exact
        double scale = std::sqrt(sig_pow / (snr_lin * npow));
        for (Eigen::Index f = 0; f < F; ++f) {
            pow(f, n) = std::norm(frames(f, n) + scale * noise(f));
            if (injected != nullptr) (*injected)(f, n) = scale * noise(f);
        }
    }
    return pow;
}

namespace {

struct AdamDriver {
    std::vector<nn::ParamView> params;
    std::vector<BlockGroup> groups;
    nn::AdamState state;

    AdamDriver(MinVae& m, double lr, nn::AdamState* io) {
        params = model_param_views(m, &groups);
        if (io != nullptr && io->m.size() == params.size())
            state = *io;
        else
            state = nn::make_adam(params, lr);
    }

    std::vector<bool> mask(const std::function<bool(BlockGroup)>& pred) const {
        std::vector<bool> out(groups.size());
        for (std::size_t i = 0; i < groups.size(); ++i) out[i] = pred(groups[i]);
        return out;
    }
};

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, Rng& rng) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        auto j = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

VectorXd draw_noise(Eigen::Index n, Rng& rng) {
    VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = rng.normal();
    return out;
}

// Keeps the last epoch-boundary state so divergence leaves a usable model.
struct Guard {
    MinVae& live;
    MinVae snapshot;
    explicit Guard(MinVae& m) : live(m), snapshot(m) {}
    void commit() { snapshot = live; }
    void restore() { live = snapshot; }
};

}  // namespace

TrainLog train_minvae(MinVae& m, const Corpus& corpus, const TrainConfig& cfg,
                      nn::AdamState* adam_io) {
    if (corpus.num_frames() == 0) throw InvalidInput("train_minvae: empty corpus");
    if (m.variant != Variant::MinV1 && m.variant != Variant::MinV2)
        throw InvalidInput("train_minvae: expects min-v1 or min-v2");
    m.validate();

    const Eigen::Index N = corpus.num_frames();
    AdamDriver adam(m, cfg.learning_rate, adam_io);
    auto active = adam.mask([&](BlockGroup g) {
        if (g == BlockGroup::Priors) return cfg.train_priors;
        return g == BlockGroup::AudioEnc || g == BlockGroup::VisualEnc || g == BlockGroup::Decoder;
    });

    MatrixXd clean_pow = corpus.frames.array().abs2().matrix();
    VectorXd pi_n = VectorXd::Constant(N, 0.5);
    TrainLog log;
    Guard guard(m);

    try {
        for (int epoch = cfg.start_epoch; epoch < cfg.epochs; ++epoch) {
            auto t0 = std::chrono::steady_clock::now();
            Rng aug_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0xA06));
            MatrixXd enc_pow = augment_audio_input(corpus.frames, cfg.noise_injection, aug_rng);

            // (a) responsibilities over the full corpus
            parallel_for(N, [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
                for (std::ptrdiff_t n = lo; n < hi; ++n) {
                    Rng r(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                      static_cast<std::uint64_t>(n), 0x3E5));
                    auto [j0, j1] = j_tilde_pair(m, enc_pow.col(n), clean_pow.col(n),
                                                 corpus.visual.col(n), r);
                    pi_n(n) = update_responsibility(j0, j1, m.priors.pi);
                }
            });

            // (b) minibatch gradient passes on the Theta objective
            Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x5F));
            auto order = shuffled_indices(N, shuffle_rng);
            ModelGrads grads = ModelGrads::zeros_like(m);
            double loss_sum = 0.0;
            Rng noise_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x401));
            for (Eigen::Index start = 0; start < N; start += cfg.batch_size) {
                Eigen::Index stop = std::min<Eigen::Index>(N, start + cfg.batch_size);
                grads.set_zero();
                for (Eigen::Index k = start; k < stop; ++k) {
                    Eigen::Index n = order[static_cast<std::size_t>(k)];
                    VectorXd na = draw_noise(m.L, noise_rng);
                    VectorXd nv = draw_noise(m.L, noise_rng);
                    loss_sum += minvae_frame_loss_full(m, enc_pow.col(n), clean_pow.col(n),
                                                       corpus.visual.col(n), pi_n(n), na, nv,
                                                       &grads);
                }
                scale_grads(grads, 1.0 / static_cast<double>(stop - start));
                auto gv = model_grad_views(grads, m);
                nn::adam_step(adam.params, gv, adam.state, &active);
            }

            // (c) closed-form pi update
            m.priors.pi = update_pi(pi_n);

            double mean_loss = loss_sum / static_cast<double>(N);
            if (!std::isfinite(mean_loss)) throw NumericalError("train_minvae: loss diverged");
            log.push_back({epoch, mean_loss, m.priors.pi, pi_n.mean(), seconds_since(t0)});
            guard.commit();
        }
    } catch (const NumericalError&) {
        guard.restore();
        throw;
    }
    if (adam_io != nullptr) *adam_io = adam.state;
    return log;
}

TrainLog train_standard(MinVae& m, const Corpus& corpus, const TrainConfig& cfg,
                      nn::AdamState* adam_io) {
    if (corpus.num_frames() == 0) throw InvalidInput("train_standard: empty corpus");
    if (m.variant != Variant::AVae && m.variant != Variant::VVae && m.variant != Variant::AvVae)
        throw InvalidInput("train_standard: expects a-vae, v-vae or av-vae");
    m.validate();

    const Eigen::Index N = corpus.num_frames();
    AdamDriver adam(m, cfg.learning_rate, adam_io);
    auto active = adam.mask([&](BlockGroup g) {
        switch (g) {
            case BlockGroup::AudioEnc:
                return m.has_audio_encoder();
            case BlockGroup::VisualEnc:
                return m.has_visual_encoder();
            case BlockGroup::PriorNet:
                return m.has_prior_net();
            case BlockGroup::Decoder:
                return true;
            case BlockGroup::Priors:
                return cfg.train_priors;
        }
        return false;
    });

    MatrixXd clean_pow = corpus.frames.array().abs2().matrix();
    TrainLog log;
    Guard guard(m);

    try {
        for (int epoch = cfg.start_epoch; epoch < cfg.epochs; ++epoch) {
            auto t0 = std::chrono::steady_clock::now();
            Rng aug_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0xA06));
            MatrixXd enc_pow = augment_audio_input(corpus.frames, cfg.noise_injection, aug_rng);

            Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x5F));
            auto order = shuffled_indices(N, shuffle_rng);
            ModelGrads grads = ModelGrads::zeros_like(m);
            double loss_sum = 0.0;
            Rng noise_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x401));
            for (Eigen::Index start = 0; start < N; start += cfg.batch_size) {
                Eigen::Index stop = std::min<Eigen::Index>(N, start + cfg.batch_size);
                grads.set_zero();
                for (Eigen::Index k = start; k < stop; ++k) {
                    Eigen::Index n = order[static_cast<std::size_t>(k)];
                    VectorXd noise = draw_noise(m.L, noise_rng);
                    ElboResult res;
                    if (m.variant == Variant::AVae)
                        res = elbo_branch_full(m, enc_pow.col(n), clean_pow.col(n),
                                               corpus.visual.col(n), Branch::Audio, noise, &grads,
                                               1.0);
                    else if (m.variant == Variant::VVae)
                        res = elbo_branch_full(m, clean_pow.col(n), clean_pow.col(n),
                                               corpus.visual.col(n), Branch::Visual, noise, &grads,
                                               1.0);
                    else
                        res = elbo_av_full(m, enc_pow.col(n), clean_pow.col(n),
                                           corpus.visual.col(n), noise, &grads, 1.0);
                    loss_sum += res.loss;
                }
                scale_grads(grads, 1.0 / static_cast<double>(stop - start));
                auto gv = model_grad_views(grads, m);
                nn::adam_step(adam.params, gv, adam.state, &active);
            }
            double mean_loss = loss_sum / static_cast<double>(N);
            if (!std::isfinite(mean_loss)) throw NumericalError("train_standard: loss diverged");
            log.push_back({epoch, mean_loss, m.priors.pi, m.priors.pi, seconds_since(t0)});
            guard.commit();
        }
    } catch (const NumericalError&) {
        guard.restore();
        throw;
    }
    if (adam_io != nullptr) *adam_io = adam.state;
    return log;
}

TrainLog train_v3(MinVae& m, const Corpus& corpus, const TrainConfig& cfg,
                      nn::AdamState* adam_io) {
    if (corpus.num_frames() == 0) throw InvalidInput("train_v3: empty corpus");
    if (m.variant != Variant::MinV3) throw InvalidInput("train_v3: expects min-v3");
    m.validate();

    const Eigen::Index N = corpus.num_frames();
    AdamDriver adam(m, cfg.learning_rate, adam_io);
    MatrixXd clean_pow = corpus.frames.array().abs2().matrix();
    TrainLog log;
    Guard guard(m);

    try {
        for (int epoch = cfg.start_epoch; epoch < cfg.epochs; ++epoch) {
            auto t0 = std::chrono::steady_clock::now();
            const bool audio_phase = epoch % 2 == 0;
            auto active = adam.mask([&](BlockGroup g) {
                if (g == BlockGroup::Decoder) return true;
                if (g == BlockGroup::AudioEnc) return audio_phase;
                if (g == BlockGroup::VisualEnc) return !audio_phase;
                if (g == BlockGroup::Priors) return cfg.train_priors;
                return false;
            });
            Rng aug_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0xA06));
            MatrixXd enc_pow = augment_audio_input(corpus.frames, cfg.noise_injection, aug_rng);

            Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x5F));
            auto order = shuffled_indices(N, shuffle_rng);
            ModelGrads grads = ModelGrads::zeros_like(m);
            double loss_sum = 0.0;
            Rng noise_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x401));
            for (Eigen::Index start = 0; start < N; start += cfg.batch_size) {
                Eigen::Index stop = std::min<Eigen::Index>(N, start + cfg.batch_size);
                grads.set_zero();
                for (Eigen::Index k = start; k < stop; ++k) {
                    Eigen::Index n = order[static_cast<std::size_t>(k)];
                    VectorXd noise = draw_noise(m.L, noise_rng);
                    ElboResult res =
                        audio_phase
                            ? elbo_branch_full(m, enc_pow.col(n), clean_pow.col(n),
                                               corpus.visual.col(n), Branch::Audio, noise, &grads,
                                               1.0)
                            : elbo_branch_full(m, clean_pow.col(n), clean_pow.col(n),
                                               corpus.visual.col(n), Branch::Visual, noise, &grads,
                                               1.0);
                    loss_sum += res.loss;
                }
                scale_grads(grads, 1.0 / static_cast<double>(stop - start));
                auto gv = model_grad_views(grads, m);
                nn::adam_step(adam.params, gv, adam.state, &active);
            }
            double mean_loss = loss_sum / static_cast<double>(N);
            if (!std::isfinite(mean_loss)) throw NumericalError("train_v3: loss diverged");
            log.push_back({epoch, mean_loss, m.priors.pi, m.priors.pi, seconds_since(t0)});
            guard.commit();
        }
    } catch (const NumericalError&) {
        guard.restore();
        throw;
    }
    if (adam_io != nullptr) *adam_io = adam.state;
    return log;
}

TrainLog train_model(MinVae& m, const Corpus& corpus, const TrainConfig& cfg,
                     nn::AdamState* adam_io) {
    switch (m.variant) {
        case Variant::AVae:
        case Variant::VVae:
        case Variant::AvVae:
            return train_standard(m, corpus, cfg, adam_io);
        case Variant::MinV1:
        case Variant::MinV2:
            return train_minvae(m, corpus, cfg, adam_io);
        case Variant::MinV3:
            return train_v3(m, corpus, cfg, adam_io);
    }
    throw InvalidInput("train_model: unknown variant");
}

}  // namespace minvae::train
