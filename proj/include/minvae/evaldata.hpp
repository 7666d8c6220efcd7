#ifndef MINVAE_EVALDATA_HPP_
#define MINVAE_EVALDATA_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "minvae/dsp.hpp"
#include "minvae/enhance.hpp"
#include "minvae/train.hpp"

namespace minvae::evaldata {

/// SI-SDR is capped here; exact reconstructions would otherwise be +inf.
inline constexpr double kSiSdrCap = 100.0;

struct ToyCorpusSpec {
    int n_utterances = 50;
    int frames_per_utterance = 60;
    int F_toy = 64;
    int L_toy = 8;
    int M_toy = 8;
    double visual_informativeness = 0.95;
    std::uint64_t seed = 0;

    void validate() const;
    int window_len() const { return 2 * (F_toy - 1); }
    int hop() const { return window_len() / 2; }
};

struct ToyUtterance {
    Eigen::MatrixXcd frames_raw;  // model draws, F x N
    Eigen::MatrixXcd frames;      // STFT of the clean waveform (what training sees)
    Eigen::MatrixXd visual;       // M x N
    Eigen::MatrixXd z;            // L x N ground-truth latents
    Eigen::MatrixXd clean_var;    // F x N generator variances exp(A z + b)
    dsp::Waveform wav;            // clean waveform, istft of frames_raw
};

/// Synthetic corpus with every generator parameter exposed for oracle use.
struct ToyCorpus {
    ToyCorpusSpec spec;
    Eigen::MatrixXd A;  // F x L log-variance map
    Eigen::VectorXd b;  // F
    Eigen::MatrixXd C;  // M x L visual map (orthonormal columns)
    Eigen::VectorXd mu_a, mu_v;
    double sigma_a = 1.0, sigma_v = 1.0;
    double pi = 0.5;
    std::vector<ToyUtterance> utterances;

    /// Pools the consistent spectrogram frames of all utterances.
    train::Corpus pooled_training() const;
};

ToyCorpus generate_toy_corpus(const ToyCorpusSpec& spec);

/// Scales `noise` so that 10 log10(P_clean / P_noise) == snr_db, then adds.
dsp::Waveform mix_at_snr(const dsp::Waveform& clean, const dsp::Waveform& noise, double snr_db);

/// Scale-invariant SDR in dB; the estimate is projected onto the reference.
double si_sdr(const dsp::Waveform& reference, const dsp::Waveform& estimate);
double si_sdr(const std::vector<double>& reference, const std::vector<double>& estimate);

dsp::Waveform white_noise(std::size_t len, Rng& rng, int sample_rate = 16000);

// ---- evaluation -------------------------------------------------------------

enum class EnhancerKind { Model, Bypass, OracleWiener };

const char* enhancer_kind_name(EnhancerKind k);

struct EvalItem {
    std::string utterance_id;
    double snr_db = 0.0;
    double in_sisdr = 0.0;
    double out_sisdr = 0.0;
    double delta() const { return out_sisdr - in_sisdr; }
};

struct SnrAggregate {
    double snr_db = 0.0;
    double mean_in = 0.0;
    double mean_out = 0.0;
    double mean_delta = 0.0;
    int count = 0;
};

struct ScoreReport {
    EnhancerKind kind = EnhancerKind::Model;
    std::vector<EvalItem> items;
    std::vector<SnrAggregate> aggregates;  // one row per SNR level
};

/// Mixes each utterance with white noise at each SNR level, enhances it, and
/// scores input vs output SI-SDR. `model` may be null for Bypass/OracleWiener.
ScoreReport evaluate(const models::MinVae* model, const ToyCorpus& corpus,
                     const std::vector<double>& snr_levels, const enhance::EnhanceConfig& ecfg,
                     EnhancerKind kind, std::uint64_t mix_seed);

/// Tab-separated rows: utterance_id, snr_db, in_sisdr, out_sisdr, delta.
/// Per-SNR aggregate rows use the pseudo-id "mean" (or "oracle"/"bypass").
void write_score_report(const ScoreReport& report, const std::string& path, bool append = false);

}  // namespace minvae::evaldata

#endif  // MINVAE_EVALDATA_HPP_
