#ifndef MINVAE_ENHANCE_HPP_
#define MINVAE_ENHANCE_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "minvae/dsp.hpp"
#include "minvae/models.hpp"

namespace minvae::enhance {

/// NMF noise floor used for gains and multiplicative updates.
inline constexpr double kNmfFloor = 1e-12;

struct NmfModel {
    Eigen::MatrixXd W;  // F x K
    Eigen::MatrixXd H;  // K x N
};

struct SpeechPosterior {
    Eigen::MatrixXcd m;  // F x N posterior means
    Eigen::MatrixXd nu;  // F x N posterior variances
};

struct EnhanceConfig {
    int vem_iters = 100;
    int mh_total = 40;
    int mh_burnin = 30;   // retained samples D = mh_total - mh_burnin
    double epsilon = 0.01;
    std::uint64_t seed = 0;
    int nmf_rank = 0;           // 0: take the model's rank
    double nmf_init_scale = 1.0;
    double pi_init = 0.5;
    enum class Init { Visual, Audio } init = Init::Visual;
    int window_len = 0;  // 0: derive 2*(F-1) from the model
    int hop = 533;

    int retained() const { return mh_total - mh_burnin; }
    void validate() const;
};

struct LatentChain {
    std::vector<Eigen::VectorXd> samples;  // D retained samples
    double acceptance_rate = 0.0;
    double epsilon = 0.0;
    Eigen::VectorXd last;  // chain state, warm start for the next VEM iteration
};

// ---- VE / M steps ----------------------------------------------------------

struct VeS {
    Eigen::VectorXcd m;
    Eigen::VectorXd nu;
    Eigen::VectorXd gamma;
};

/// gamma_f = [ (1/D) sum_d 1/sigma_{s,f}(z_d, v) ]^-1, then the Wiener-style
/// posterior m_f = gamma/(gamma+WH) x_f, nu_f = gamma*WH/(gamma+WH).
VeS ve_s(const models::MinVae& model, const Eigen::VectorXcd& x,
         const std::vector<Eigen::VectorXd>& z_samples, const Eigen::VectorXd& v,
         const Eigen::VectorXd& wh_col);

/// Unnormalized log target of r(z): sum_f [-log sigma_f(z,v) - (|m_f|^2+nu_f)/sigma_f(z,v)]
/// + pi_n log p(z|alpha=1) + (1-pi_n) log p(z|alpha=0).
double log_rz_unnorm(const models::MinVae& model, const Eigen::VectorXd& z,
                     const Eigen::VectorXcd& m, const Eigen::VectorXd& nu,
                     const Eigen::VectorXd& v, double pi_n);

/// Pure Metropolis accept rule: accept iff log(u) < log_ratio.
inline bool mh_accept(double log_ratio, double u) { return std::log(u) < log_ratio; }

/// Random-walk Metropolis-Hastings on log_rz_unnorm; proposal N(z, eps I).
LatentChain ve_z_mh(const models::MinVae& model, const Eigen::VectorXcd& m,
                    const Eigen::VectorXd& nu, const Eigen::VectorXd& v, double pi_n,
                    const Eigen::VectorXd& z_init, const EnhanceConfig& cfg, Rng& rng);

/// pi_n = sigmoid( mean_d[ log p(z_d|1) - log p(z_d|0) ] + log(pi/(1-pi)) ).
double ve_alpha(const models::MinVae& model, const std::vector<Eigen::VectorXd>& z_samples,
                double pi);

/// One multiplicative IS-NMF update of H then W against V = |x-m|^2 + nu;
/// entries re-floored at kNmfFloor.
void m_step_nmf(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& m, const Eigen::MatrixXd& nu,
                Eigen::MatrixXd& W, Eigen::MatrixXd& H);

/// Test-time pi update; same rule as training.
double update_pi_test(const Eigen::VectorXd& pi_n);

/// s_hat = gamma/(gamma + WH) .* x, elementwise.
Eigen::MatrixXcd estimate_speech(const Eigen::MatrixXcd& x, const Eigen::MatrixXd& gamma,
                                 const Eigen::MatrixXd& wh);

// ---- full pipeline ----------------------------------------------------------

struct IterDiag {
    int iter = 0;
    double q_surrogate = 0.0;
    double mean_acceptance = 0.0;
    double pi = 0.0;
};

struct Diagnostics {
    std::vector<IterDiag> iters;
};

void write_diagnostics(const Diagnostics& d, const std::string& path);

struct EnhanceResult {
    dsp::Waveform wav;
    dsp::ComplexSpectrogram enhanced;
    Diagnostics diag;
};

/// Appendix-style VEM enhancement of one utterance. `visual` has one column
/// per STFT frame; it may be empty when the model needs no visual input and
/// the chain is audio-initialized.
EnhanceResult enhance_utterance(const models::MinVae& model, const dsp::Waveform& noisy,
                                const Eigen::MatrixXd& visual, const EnhanceConfig& cfg);

/// Same VEM on a precomputed noisy spectrogram (spectrogram-domain callers).
struct SpectrogramEnhanceResult {
    Eigen::MatrixXcd s_hat;
    Diagnostics diag;
};
SpectrogramEnhanceResult enhance_spectrogram(const models::MinVae& model,
                                             const Eigen::MatrixXcd& x,
                                             const Eigen::MatrixXd& visual,
                                             const EnhanceConfig& cfg);

}  // namespace minvae::enhance

#endif  // MINVAE_ENHANCE_HPP_
