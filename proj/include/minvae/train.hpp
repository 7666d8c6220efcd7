#ifndef MINVAE_TRAIN_HPP_
#define MINVAE_TRAIN_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "minvae/models.hpp"

namespace minvae::train {

/// Pooled training frames: one STFT frame and one visual feature per column.
struct Corpus {
    Eigen::MatrixXcd frames;  // F x N
    Eigen::MatrixXd visual;   // M x N

    Eigen::Index num_frames() const { return frames.cols(); }
};

struct NoiseInjection {
    bool enabled = false;
    double fraction = 1.0 / 3.0;
    double snr_db = 0.0;
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 128;
    double learning_rate = 1e-4;
    NoiseInjection noise_injection;
    std::uint64_t seed = 0;
    /// Update the mixture prior parameters (mu_a, mu_v, sigma_a, sigma_v).
    /// On for the min-* variants, off for a-vae / v-vae (standard-normal prior).
    bool train_priors = true;
    /// First epoch index; all per-epoch RNG streams key on the absolute epoch,
    /// so a resumed run replays the uninterrupted one exactly.
    int start_epoch = 0;
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double pi = 0.0;
    double mean_pi_n = 0.0;
    double wall_seconds = 0.0;
};

using TrainLog = std::vector<EpochLog>;

void write_train_log(const TrainLog& log, const std::string& path);

// ---- gradients -------------------------------------------------------------

/// Gradients for every trainable tensor of a model. pi is excluded: it has a
/// closed-form update.
struct ModelGrads {
    nn::MlpGrads audio_enc, visual_enc, decoder, prior_net;
    Eigen::VectorXd d_mu_a, d_mu_v;
    double d_log_sigma_a = 0.0, d_log_sigma_v = 0.0;

    static ModelGrads zeros_like(const models::MinVae& m);
    void set_zero();
};

enum class BlockGroup { AudioEnc, VisualEnc, Decoder, PriorNet, Priors };

/// Trainable tensors in checkpoint order; `groups` receives one tag per block.
std::vector<nn::ParamView> model_param_views(models::MinVae& m,
                                             std::vector<BlockGroup>* groups = nullptr);
std::vector<nn::ConstParamView> model_grad_views(const ModelGrads& g, const models::MinVae& m);

// ---- losses ----------------------------------------------------------------

/// KL( N(mean1, diag(cov_diag1)) || N(mean2, cov2 * I) ), cov2 a variance.
double kl_gaussians(const Eigen::VectorXd& mean1, const Eigen::VectorXd& cov_diag1,
                    const Eigen::VectorXd& mean2, double cov2);

/// KL between two diagonal Gaussians (conditioned-prior path of the av-vae).
double kl_gaussians_diag(const Eigen::VectorXd& mean1, const Eigen::VectorXd& cov1,
                         const Eigen::VectorXd& mean2, const Eigen::VectorXd& cov2);

/// KL( Bernoulli(pi_n) || Bernoulli(pi) ); >= 0, zero iff pi_n == pi.
double kl_bernoulli(double pi_n, double pi);

enum class Branch { Audio, Visual };

struct ElboResult {
    double loss = 0.0;   // negative ELBO (single-sample)
    double recon = 0.0;  // log p(s | z)
    double kl = 0.0;     // KL(q || prior)
};

/// Single-sample negative ELBO for one branch encoder against its isotropic
/// prior component; `noise` is the frozen reparameterization draw (length L).
/// When grads is non-null, gradients scaled by `weight` are accumulated.
ElboResult elbo_branch_with_noise(const models::MinVae& m, const Eigen::VectorXd& s_pow,
                                  const Eigen::VectorXd& v, Branch branch,
                                  const Eigen::VectorXd& noise, ModelGrads* grads,
                                  double weight = 1.0);

/// av-vae negative ELBO: joint encoder against the conditioned prior net.
ElboResult elbo_av_with_noise(const models::MinVae& m, const Eigen::VectorXd& s_pow,
                              const Eigen::VectorXd& v, const Eigen::VectorXd& noise,
                              ModelGrads* grads, double weight = 1.0);

/// Variant dispatch (a-vae, v-vae, av-vae) with a fresh reparameterization draw.
ElboResult elbo_standard(const models::MinVae& m, const Eigen::VectorXd& s_pow,
                         const Eigen::VectorXd& v, Rng& rng, ModelGrads* grads = nullptr);

/// J~(alpha): KL(q(z|.,alpha) || p(z|alpha)) - log p(s | z^alpha) with one
/// reparameterized draw from the alpha-selected encoder.
double j_tilde(const models::MinVae& m, const Eigen::VectorXd& s_pow, const Eigen::VectorXd& v,
               int alpha, Rng& rng);

/// pi_n = sigmoid( j0 - j1 + log(pi / (1-pi)) ).
double update_responsibility(double j0, double j1, double pi);

/// Per-frame MIN-VAE objective: pi_n * J1 + (1-pi_n) * J0 + KL(r(alpha)||p(alpha)).
/// Gradients flow to both encoders, the decoder and the priors; pi_n is constant.
double minvae_frame_loss_with_noise(const models::MinVae& m, const Eigen::VectorXd& s_pow,
                                    const Eigen::VectorXd& v, double pi_n,
                                    const Eigen::VectorXd& noise_audio,
                                    const Eigen::VectorXd& noise_visual, ModelGrads* grads);

/// pi = mean(pi_n), clipped to [1e-4, 1 - 1e-4].
double update_pi(const Eigen::VectorXd& pi_n);

/// Audio-encoder input powers for one epoch: |s|^2 with a random subset of
/// `fraction` frames replaced by |s + uniform noise at snr_db frame SNR|^2.
/// Decoder targets and visual inputs are untouched. `injected`, when given,
/// receives the complex noise actually added (zero columns where clean).
Eigen::MatrixXd augment_audio_input(const Eigen::MatrixXcd& frames, const NoiseInjection& cfg,
                                    Rng& rng, Eigen::MatrixXcd* injected = nullptr);

// ---- drivers ---------------------------------------------------------------

/// Alternating MIN-VAE training: per epoch (a) recompute responsibilities,
/// (b) minibatch Adam passes on the MIN-VAE loss, (c) closed-form pi update.
/// `adam_io`, when given, supplies the optimizer state to continue from and
/// receives the final state (exact checkpoint resume).
TrainLog train_minvae(models::MinVae& m, const Corpus& corpus, const TrainConfig& cfg,
                      nn::AdamState* adam_io = nullptr);

/// Standard single-encoder ELBO training for a-vae / v-vae / av-vae.
TrainLog train_standard(models::MinVae& m, const Corpus& corpus, const TrainConfig& cfg,
                        nn::AdamState* adam_io = nullptr);

/// min-v3: even epochs train (audio encoder + decoder), odd epochs
/// (visual encoder + decoder); the inactive encoder is frozen.
TrainLog train_v3(models::MinVae& m, const Corpus& corpus, const TrainConfig& cfg,
                  nn::AdamState* adam_io = nullptr);

/// Dispatch on m.variant.
TrainLog train_model(models::MinVae& m, const Corpus& corpus, const TrainConfig& cfg,
                     nn::AdamState* adam_io = nullptr);

}  // namespace minvae::train

#endif  // MINVAE_TRAIN_HPP_
