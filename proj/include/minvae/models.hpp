#ifndef MINVAE_MODELS_HPP_
#define MINVAE_MODELS_HPP_

#include <Eigen/Dense>
#include <string>

#include "minvae/nn.hpp"

namespace minvae::models {

/// Floor applied to every variance produced by a network head.
inline constexpr double kVarFloor = 1e-6;

enum class Variant { AVae, VVae, AvVae, MinV1, MinV2, MinV3 };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Learnable isotropic audio/visual priors and the Bernoulli weight of the
/// latent selector. Scales are stored as logs for unconstrained updates.
struct MixturePriorParams {
    Eigen::VectorXd mu_a;
    Eigen::VectorXd mu_v;
    double log_sigma_a = 0.0;
    double log_sigma_v = 0.0;
    double pi = 0.5;

    double sigma_a() const { return std::max(std::exp(log_sigma_a), kVarFloor); }
    double sigma_v() const { return std::max(std::exp(log_sigma_v), kVarFloor); }
};

struct EncoderOutput {
    Eigen::VectorXd mean;      // L
    Eigen::VectorXd variance;  // L, entries >= kVarFloor
};

/// One bundle covers all six variants; unused networks stay empty.
///   a-vae   audio encoder (F) + decoder (L)
///   v-vae   visual encoder (M) + decoder (L)
///   av-vae  joint encoder (F+M) + conditioned prior net (M) + decoder (L+M)
///   min-v1  audio (F) + visual (M) encoders + decoder (L+M) + mixture priors
///   min-v2  like v1 with an audio-only decoder (L)
///   min-v3  v2 trained by alternating the two encoders
struct MinVae {
    Variant variant = Variant::MinV2;
    Eigen::Index F = 0, L = 0, M = 0;
    int nmf_rank = 10;

    nn::Mlp audio_encoder;   // output 2L: mean, log-variance
    nn::Mlp visual_encoder;  // output 2L
    nn::Mlp decoder;         // output F, exp head
    nn::Mlp prior_net;       // av-vae only, output 2L

    MixturePriorParams priors;

    bool has_audio_encoder() const { return variant != Variant::VVae; }
    bool has_visual_encoder() const {
        return variant == Variant::VVae || variant == Variant::MinV1 ||
               variant == Variant::MinV2 || variant == Variant::MinV3;
    }
    bool has_prior_net() const { return variant == Variant::AvVae; }
    bool decoder_sees_visual() const {
        return variant == Variant::AvVae || variant == Variant::MinV1;
    }
    Eigen::Index audio_encoder_input_dim() const {
        return variant == Variant::AvVae ? F + M : F;
    }
    Eigen::Index decoder_input_dim() const { return decoder_sees_visual() ? L + M : L; }

    void validate() const;
};

/// Architecture hyper-parameters: hidden width 0 means a single dense layer.
struct ModelArch {
    int hidden_encoder = 128;
    int hidden_decoder = 128;
};

MinVae make_model(Variant variant, Eigen::Index F, Eigen::Index L, Eigen::Index M,
                  const ModelArch& arch, Rng& rng, int nmf_rank = 10);

// ---- evaluation ------------------------------------------------------------

/// Splits a 2L network output into (mean, floored variance).
EncoderOutput split_encoder_output(const Eigen::VectorXd& raw);

/// sigma_s(z, v): strictly positive F-vector. v is ignored unless the
/// variant's decoder takes it.
Eigen::VectorXd decode_variance(const MinVae& m, const Eigen::VectorXd& z,
                                const Eigen::VectorXd& v);

EncoderOutput encode_audio(const MinVae& m, const Eigen::VectorXd& s_pow);
EncoderOutput encode_audio(const MinVae& m, const Eigen::VectorXd& s_pow,
                           const Eigen::VectorXd& v);  // av-vae joint encoder
EncoderOutput encode_visual(const MinVae& m, const Eigen::VectorXd& v);

/// Conditioned prior (mu_z(v), sigma_z(v)) of the av-vae.
EncoderOutput conditioned_prior(const MinVae& m, const Eigen::VectorXd& v);

/// log N_c(s; 0, diag(variance)) = sum_f [ -log(pi var_f) - |s_f|^2 / var_f ].
double loglik_complex_gaussian(const Eigen::VectorXcd& s, const Eigen::VectorXd& variance);

/// Same quantity from precomputed |s_f|^2 (power-domain call sites).
double loglik_complex_gaussian_pow(const Eigen::VectorXd& s_pow, const Eigen::VectorXd& variance);

/// log density of the isotropic prior component selected by alpha (1 = audio).
double prior_logpdf(const MixturePriorParams& p, const Eigen::VectorXd& z, int alpha);

/// log[ pi_n N(z; audio enc) + (1 - pi_n) N(z; visual enc) ], log-sum-exp.
double mixture_posterior_logpdf(const MinVae& m, const Eigen::VectorXd& z,
                                const Eigen::VectorXd& s_pow, const Eigen::VectorXd& v,
                                double pi_n);

double gaussian_diag_logpdf(const Eigen::VectorXd& z, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& variance);
double gaussian_iso_logpdf(const Eigen::VectorXd& z, const Eigen::VectorXd& mean, double variance);

}  // namespace minvae::models

#endif  // MINVAE_MODELS_HPP_
