#include "minvae/models.hpp"

#include <cmath>
#include <numbers>

namespace minvae::models {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::AVae:
            return "a-vae";
        case Variant::VVae:
            return "v-vae";
        case Variant::AvVae:
            return "av-vae";
        case Variant::MinV1:
            return "min-v1";
        case Variant::MinV2:
            return "min-v2";
        case Variant::MinV3:
            return "min-v3";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "a-vae") return Variant::AVae;
    if (name == "v-vae") return Variant::VVae;
    if (name == "av-vae") return Variant::AvVae;
    if (name == "min-v1") return Variant::MinV1;
    if (name == "min-v2") return Variant::MinV2;
    if (name == "min-v3") return Variant::MinV3;
    throw InvalidInput("unknown variant: " + name);
}

void MinVae::validate() const {
    if (F < 1 || L < 1 || M < 1) throw InvalidInput("MinVae: dims must be positive");
    if (has_audio_encoder()) {
        audio_encoder.validate();
        if (audio_encoder.input_dim() != audio_encoder_input_dim() ||
            audio_encoder.output_dim() != 2 * L)
            throw InvalidInput("MinVae: audio encoder shape mismatch");
    }
    if (has_visual_encoder()) {
        visual_encoder.validate();
        if (visual_encoder.input_dim() != M || visual_encoder.output_dim() != 2 * L)
            throw InvalidInput("MinVae: visual encoder shape mismatch");
    }
    if (has_prior_net()) {
        prior_net.validate();
        if (prior_net.input_dim() != M || prior_net.output_dim() != 2 * L)
            throw InvalidInput("MinVae: prior net shape mismatch");
    }
    decoder.validate();
    if (decoder.input_dim() != decoder_input_dim() || decoder.output_dim() != F)
        throw InvalidInput("MinVae: decoder shape mismatch");
    if (priors.mu_a.size() != L || priors.mu_v.size() != L)
        throw InvalidInput("MinVae: prior mean size mismatch");
    if (priors.pi <= 0.0 || priors.pi >= 1.0) throw InvalidInput("MinVae: pi must be in (0,1)");
}

namespace {

std::vector<Eigen::Index> layer_dims(Eigen::Index in, int hidden, Eigen::Index out) {
    if (hidden > 0) return {in, hidden, out};
    return {in, out};
}

}  // namespace

MinVae make_model(Variant variant, Eigen::Index F, Eigen::Index L, Eigen::Index M,
                  const ModelArch& arch, Rng& rng, int nmf_rank) {
    MinVae m;
    m.variant = variant;
    m.F = F;
    m.L = L;
    m.M = M;
    m.nmf_rank = nmf_rank;
    using nn::Activation;
    if (m.has_audio_encoder())
        m.audio_encoder = nn::make_mlp(layer_dims(m.audio_encoder_input_dim(), arch.hidden_encoder, 2 * L),
                                       Activation::Tanh, Activation::Identity, rng);
    if (m.has_visual_encoder())
        m.visual_encoder = nn::make_mlp(layer_dims(M, arch.hidden_encoder, 2 * L), Activation::Tanh,
                                        Activation::Identity, rng);
    if (m.has_prior_net())
        m.prior_net = nn::make_mlp(layer_dims(M, arch.hidden_encoder, 2 * L), Activation::Tanh,
                                   Activation::Identity, rng);
    m.decoder = nn::make_mlp(layer_dims(m.decoder_input_dim(), arch.hidden_decoder, F),
                             Activation::Tanh, Activation::Exp, rng);
    m.priors.mu_a = Eigen::VectorXd::Zero(L);
    m.priors.mu_v = Eigen::VectorXd::Zero(L);
    m.priors.log_sigma_a = 0.0;
    m.priors.log_sigma_v = 0.0;
    m.priors.pi = 0.5;
    return m;
}

EncoderOutput split_encoder_output(const Eigen::VectorXd& raw) {
    const Eigen::Index L = raw.size() / 2;
    EncoderOutput out;
    out.mean = raw.head(L);
    out.variance = raw.tail(L).array().exp().max(kVarFloor);
    return out;
}

Eigen::VectorXd decode_variance(const MinVae& m, const Eigen::VectorXd& z,
                                const Eigen::VectorXd& v) {
    if (z.size() != m.L) throw InvalidInput("decode_variance: z size mismatch");
    Eigen::VectorXd raw;
    if (m.decoder_sees_visual()) {
        if (v.size() != m.M) throw InvalidInput("decode_variance: v size mismatch");
        Eigen::VectorXd in(m.L + m.M);
        in << z, v;
        raw = nn::forward(m.decoder, in);
    } else {
        raw = nn::forward(m.decoder, z);
    }
    return raw.array().max(kVarFloor);
}

EncoderOutput encode_audio(const MinVae& m, const Eigen::VectorXd& s_pow) {
    if (m.variant == Variant::AvVae)
        throw InvalidInput("encode_audio: av-vae encoder also needs visual input");
    if (s_pow.size() != m.F) throw InvalidInput("encode_audio: input size mismatch");
    return split_encoder_output(nn::forward(m.audio_encoder, s_pow));
}

EncoderOutput encode_audio(const MinVae& m, const Eigen::VectorXd& s_pow,
                           const Eigen::VectorXd& v) {
    if (m.variant != Variant::AvVae) return encode_audio(m, s_pow);
    if (s_pow.size() != m.F || v.size() != m.M)
        throw InvalidInput("encode_audio: input size mismatch");
    Eigen::VectorXd in(m.F + m.M);
    in << s_pow, v;
    return split_encoder_output(nn::forward(m.audio_encoder, in));
}

EncoderOutput encode_visual(const MinVae& m, const Eigen::VectorXd& v) {
    if (!m.has_visual_encoder()) throw InvalidInput("encode_visual: variant has no visual encoder");
    if (v.size() != m.M) throw InvalidInput("encode_visual: input size mismatch");
    return split_encoder_output(nn::forward(m.visual_encoder, v));
}

EncoderOutput conditioned_prior(const MinVae& m, const Eigen::VectorXd& v) {
    if (!m.has_prior_net()) throw InvalidInput("conditioned_prior: variant has no prior net");
    if (v.size() != m.M) throw InvalidInput("conditioned_prior: input size mismatch");
    return split_encoder_output(nn::forward(m.prior_net, v));
}

double loglik_complex_gaussian(const Eigen::VectorXcd& s, const Eigen::VectorXd& variance) {
    if (s.size() != variance.size()) throw InvalidInput("loglik_complex_gaussian: size mismatch");
    return loglik_complex_gaussian_pow(s.array().abs2().matrix(), variance);
}

double loglik_complex_gaussian_pow(const Eigen::VectorXd& s_pow, const Eigen::VectorXd& variance) {
    if (s_pow.size() != variance.size())
        throw InvalidInput("loglik_complex_gaussian: size mismatch");
    if ((variance.array() <= 0.0).any())
        throw InvalidInput("loglik_complex_gaussian: variance must be positive");
    double acc = 0.0;
    for (Eigen::Index f = 0; f < s_pow.size(); ++f)
        acc += -std::log(std::numbers::pi * variance(f)) - s_pow(f) / variance(f);
    return acc;
}

double gaussian_diag_logpdf(const Eigen::VectorXd& z, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& variance) {
    if (z.size() != mean.size() || z.size() != variance.size())
        throw InvalidInput("gaussian_diag_logpdf: size mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        double d = z(i) - mean(i);
        acc += -0.5 * (std::log(2.0 * std::numbers::pi * variance(i)) + d * d / variance(i));
    }
    return acc;
}

double gaussian_iso_logpdf(const Eigen::VectorXd& z, const Eigen::VectorXd& mean, double variance) {
    if (z.size() != mean.size()) throw InvalidInput("gaussian_iso_logpdf: size mismatch");
    const auto L = static_cast<double>(z.size());
    return -0.5 * L * std::log(2.0 * std::numbers::pi * variance) -
           0.5 * (z - mean).squaredNorm() / variance;
}

double prior_logpdf(const MixturePriorParams& p, const Eigen::VectorXd& z, int alpha) {
    return alpha != 0 ? gaussian_iso_logpdf(z, p.mu_a, p.sigma_a())
                      : gaussian_iso_logpdf(z, p.mu_v, p.sigma_v());
}

double mixture_posterior_logpdf(const MinVae& m, const Eigen::VectorXd& z,
                                const Eigen::VectorXd& s_pow, const Eigen::VectorXd& v,
                                double pi_n) {
    if (pi_n < 0.0 || pi_n > 1.0) throw InvalidInput("mixture_posterior_logpdf: pi_n not in [0,1]");
    if (pi_n >= 1.0) {
        EncoderOutput a = encode_audio(m, s_pow);
        return gaussian_diag_logpdf(z, a.mean, a.variance);
    }
    if (pi_n <= 0.0) {
        EncoderOutput q = encode_visual(m, v);
        return gaussian_diag_logpdf(z, q.mean, q.variance);
    }
    EncoderOutput a = encode_audio(m, s_pow);
    EncoderOutput q = encode_visual(m, v);
    double la = std::log(pi_n) + gaussian_diag_logpdf(z, a.mean, a.variance);
    double lv = std::log(1.0 - pi_n) + gaussian_diag_logpdf(z, q.mean, q.variance);
    double hi = std::max(la, lv);
    return hi + std::log(std::exp(la - hi) + std::exp(lv - hi));
}

}  // namespace minvae::models
