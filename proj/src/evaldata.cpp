#include "minvae/evaldata.hpp"

#include <cmath>
#include <fstream>

namespace minvae::evaldata {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void ToyCorpusSpec::validate() const {
    if (n_utterances < 1 || frames_per_utterance < 1)
        throw InvalidInput("ToyCorpusSpec: counts must be >= 1");
    if (F_toy < 2 || L_toy < 1 || M_toy < 1) throw InvalidInput("ToyCorpusSpec: dims too small");
    if (M_toy < L_toy)
        throw InvalidInput("ToyCorpusSpec: M_toy must be >= L_toy (orthonormal visual map)");
    if (visual_informativeness < 0.0 || visual_informativeness > 1.0)
        throw InvalidInput("ToyCorpusSpec: informativeness must be in [0,1]");
}

namespace {

// latent trajectories stay correlated inside short blocks so the clean
// waveform's STFT remains close to the per-frame generative model
constexpr double kArCoeff = 0.9;
constexpr int kBlockLen = 8;

MatrixXd random_gaussian(Eigen::Index r, Eigen::Index c, Rng& rng, double scale) {
    MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = scale * rng.normal();
    return m;
}

// Gram-Schmidt orthonormal columns; M >= L is checked by the spec validator.
MatrixXd orthonormal_columns(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    MatrixXd raw = random_gaussian(rows, cols, rng, 1.0);
    Eigen::HouseholderQR<MatrixXd> qr(raw);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(rows, cols);
    return q;
}

}  // namespace

train::Corpus ToyCorpus::pooled_training() const {
    Eigen::Index total = 0;
    for (const auto& u : utterances) total += u.frames.cols();
    train::Corpus c;
    c.frames.resize(spec.F_toy, total);
    c.visual.resize(spec.M_toy, total);
    Eigen::Index at = 0;
    for (const auto& u : utterances) {
        c.frames.middleCols(at, u.frames.cols()) = u.frames;
        c.visual.middleCols(at, u.visual.cols()) = u.visual;
        at += u.frames.cols();
    }
    return c;
}

ToyCorpus generate_toy_corpus(const ToyCorpusSpec& spec) {
    spec.validate();
    ToyCorpus corpus;
    corpus.spec = spec;

    Rng world_rng(derive_seed(spec.seed, 0x70D0));
    const Eigen::Index F = spec.F_toy, L = spec.L_toy, M = spec.M_toy;
    // spectrally structured source: wide log-variance dynamic range
    corpus.A = random_gaussian(F, L, world_rng, 3.0 / std::sqrt(static_cast<double>(L)));
    corpus.b = random_gaussian(F, 1, world_rng, 1.0).col(0) * 2.5;
    corpus.b.array() += -2.5;
    corpus.C = orthonormal_columns(M, L, world_rng);
    corpus.mu_a = random_gaussian(L, 1, world_rng, 0.4).col(0);
    corpus.mu_v = -corpus.mu_a;
    corpus.sigma_a = 1.0;
    corpus.sigma_v = 1.0;
    corpus.pi = 0.5;

    const double rho = spec.visual_informativeness;
    const int N = spec.frames_per_utterance;
    corpus.utterances.reserve(static_cast<std::size_t>(spec.n_utterances));
    for (int u = 0; u < spec.n_utterances; ++u) {
        Rng rng(derive_seed(spec.seed, 0x0777, static_cast<std::uint64_t>(u)));
        ToyUtterance utt;
        utt.z.resize(L, N);
        utt.visual.resize(M, N);
        utt.frames_raw.resize(F, N);
        utt.clean_var.resize(F, N);

        int t = 0;
        while (t < N) {
            const bool audio = rng.uniform() < corpus.pi;
            const VectorXd& mu = audio ? corpus.mu_a : corpus.mu_v;
            const double sig = audio ? corpus.sigma_a : corpus.sigma_v;
            const int blk = std::min(kBlockLen, N - t);
            for (int i = 0; i < blk; ++i) {
                VectorXd eps(L);
                for (Eigen::Index d = 0; d < L; ++d) eps(d) = rng.normal();
                if (i == 0)
                    utt.z.col(t) = mu + std::sqrt(sig) * eps;
                else
                    utt.z.col(t + i) = mu + kArCoeff * (utt.z.col(t + i - 1) - mu) +
                                       std::sqrt((1.0 - kArCoeff * kArCoeff) * sig) * eps;
            }
            t += blk;
        }

        for (int n = 0; n < N; ++n) {
            utt.clean_var.col(n) = (corpus.A * utt.z.col(n) + corpus.b).array().exp();
            for (Eigen::Index f = 0; f < F; ++f) {
                double s = std::sqrt(utt.clean_var(f, n) / 2.0);
                utt.frames_raw(f, n) = std::complex<double>(s * rng.normal(), s * rng.normal());
            }
            VectorXd vn(M);
            for (Eigen::Index d = 0; d < M; ++d) vn(d) = rng.normal();
            utt.visual.col(n) = rho * (corpus.C * utt.z.col(n)) + (1.0 - rho) * vn;
        }

        dsp::ComplexSpectrogram raw;
        raw.frames = utt.frames_raw;
        raw.window_len = spec.window_len();
        raw.hop = spec.hop();
        raw.original_len = (N - 1) * static_cast<std::ptrdiff_t>(spec.hop()) + spec.window_len();
        utt.wav = dsp::istft(raw);
        dsp::ComplexSpectrogram consistent = dsp::stft(utt.wav, spec.window_len(), spec.hop());
        utt.frames = consistent.frames;

        corpus.utterances.push_back(std::move(utt));
    }
    return corpus;
}

dsp::Waveform mix_at_snr(const dsp::Waveform& clean, const dsp::Waveform& noise, double snr_db) {
    if (clean.samples.size() != noise.samples.size())
        throw InvalidInput("mix_at_snr: length mismatch");
    double pc = 0.0, pn = 0.0;
    for (double x : clean.samples) pc += x * x;
    for (double x : noise.samples) pn += x * x;
    if (pc <= 0.0) throw InvalidInput("mix_at_snr: clean signal has zero power");
    if (pn <= 0.0) throw InvalidInput("mix_at_snr: noise signal has zero power");
    double scale = std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
    dsp::Waveform out = clean;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += scale * noise.samples[i];
    return out;
}

double si_sdr(const std::vector<double>& reference, const std::vector<double>& estimate) {
    if (reference.size() != estimate.size()) throw InvalidInput("si_sdr: length mismatch");
    double rr = 0.0, er = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        rr += reference[i] * reference[i];
        er += estimate[i] * reference[i];
    }
    if (rr <= 0.0) throw InvalidInput("si_sdr: zero reference");
    const double a = er / rr;
    double tgt = 0.0, res = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        double t = a * reference[i];
        double r = estimate[i] - t;
        tgt += t * t;
        res += r * r;
    }
    if (res <= 0.0 || tgt <= 0.0) return kSiSdrCap;
    return std::min(10.0 * std::log10(tgt / res), kSiSdrCap);
}

double si_sdr(const dsp::Waveform& reference, const dsp::Waveform& estimate) {
    return si_sdr(reference.samples, estimate.samples);
}

dsp::Waveform white_noise(std::size_t len, Rng& rng, int sample_rate) {
    dsp::Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(len);
    for (auto& x : w.samples) x = rng.normal();
    return w;
}

const char* enhancer_kind_name(EnhancerKind k) {
    switch (k) {
        case EnhancerKind::Model:
            return "mean";
        case EnhancerKind::Bypass:
            return "bypass";
        case EnhancerKind::OracleWiener:
            return "oracle";
    }
    return "?";
}

ScoreReport evaluate(const models::MinVae* model, const ToyCorpus& corpus,
                     const std::vector<double>& snr_levels, const enhance::EnhanceConfig& ecfg,
                     EnhancerKind kind, std::uint64_t mix_seed) {
    if (kind == EnhancerKind::Model && model == nullptr)
        throw InvalidInput("evaluate: model required for model-based enhancement");
    if (snr_levels.empty()) throw InvalidInput("evaluate: no SNR levels");

    ScoreReport report;
    report.kind = kind;
    const int W = corpus.spec.window_len();
    const int hop = corpus.spec.hop();

    for (std::size_t si = 0; si < snr_levels.size(); ++si) {
        const double snr = snr_levels[si];
        SnrAggregate agg;
        agg.snr_db = snr;
        for (std::size_t u = 0; u < corpus.utterances.size(); ++u) {
            const ToyUtterance& utt = corpus.utterances[u];
            Rng nrng(derive_seed(mix_seed, 0x401C, u, si));
            dsp::Waveform noise = white_noise(utt.wav.samples.size(), nrng, utt.wav.sample_rate);
            dsp::Waveform noisy = mix_at_snr(utt.wav, noise, snr);

            dsp::Waveform out;
            switch (kind) {
                case EnhancerKind::Bypass:
                    out = noisy;
                    break;
                case EnhancerKind::OracleWiener: {
                    // generator variances against the true noise realization
                    dsp::ComplexSpectrogram X = dsp::stft(noisy, W, hop);
                    dsp::Waveform scaled_noise = noisy;
                    for (std::size_t i = 0; i < scaled_noise.samples.size(); ++i)
                        scaled_noise.samples[i] -= utt.wav.samples[i];
                    dsp::ComplexSpectrogram B = dsp::stft(scaled_noise, W, hop);
                    MatrixXd bpow = B.frames.array().abs2().matrix();
                    dsp::ComplexSpectrogram S = X;
                    for (Eigen::Index n = 0; n < X.num_frames(); ++n)
                        for (Eigen::Index f = 0; f < X.bins(); ++f) {
                            double g = utt.clean_var(f, n) /
                                       (utt.clean_var(f, n) + std::max(bpow(f, n), 1e-300));
                            S.frames(f, n) = g * X.frames(f, n);
                        }
                    out = dsp::istft(S);
                    break;
                }
                case EnhancerKind::Model: {
                    enhance::EnhanceConfig cfg = ecfg;
                    cfg.window_len = W;
                    cfg.hop = hop;
                    cfg.seed = derive_seed(ecfg.seed, 0xE4A, u, si);
                    auto res = enhance::enhance_utterance(*model, noisy, utt.visual, cfg);
                    out = res.wav;
                    break;
                }
            }

            EvalItem item;
            item.utterance_id = "utt" + std::to_string(u);
            item.snr_db = snr;
            item.in_sisdr = si_sdr(utt.wav, noisy);
            item.out_sisdr = si_sdr(utt.wav, out);
            agg.mean_in += item.in_sisdr;
            agg.mean_out += item.out_sisdr;
            agg.count += 1;
            report.items.push_back(std::move(item));
        }
        agg.mean_in /= agg.count;
        agg.mean_out /= agg.count;
        agg.mean_delta = agg.mean_out - agg.mean_in;
        report.aggregates.push_back(agg);
    }
    return report;
}

void write_score_report(const ScoreReport& report, const std::string& path, bool append) {
    std::ofstream f(path, append ? std::ios::app : std::ios::trunc);
    if (!f) throw IoError("cannot write score report: " + path);
    if (!append) f << "utterance_id\tsnr_db\tin_sisdr\tout_sisdr\tdelta\n";
    f.precision(10);
    for (const auto& it : report.items)
        f << it.utterance_id << '\t' << it.snr_db << '\t' << it.in_sisdr << '\t' << it.out_sisdr
          << '\t' << it.delta() << '\n';
    const char* id = enhancer_kind_name(report.kind);
    for (const auto& a : report.aggregates)
        f << id << '\t' << a.snr_db << '\t' << a.mean_in << '\t' << a.mean_out << '\t'
          << a.mean_delta << '\n';
    if (!f) throw IoError("short write: " + path);
}

}  // namespace minvae::evaldata
