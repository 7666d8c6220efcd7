#include "minvae/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace minvae::gradcheck {

using Eigen::VectorXd;
using models::MinVae;
using models::ModelArch;
using models::Variant;

namespace {

constexpr double kFdStep = 1e-5;

double rel_err(double a, double b, double floor_) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_});
}

// max relative error between analytic block gradients and central differences
// of `loss` over every parameter of `model`
double fd_scan(MinVae& model, const std::function<double()>& loss,
               const std::function<void(train::ModelGrads&)>& grad_fn, double denom_floor) {
    train::ModelGrads grads = train::ModelGrads::zeros_like(model);
    grad_fn(grads);
    auto params = train::model_param_views(model);
    auto gviews = train::model_grad_views(grads, model);

    double worst = 0.0;
    for (std::size_t b = 0; b < params.size(); ++b) {
        for (Eigen::Index i = 0; i < params[b].size; ++i) {
            double& p = params[b].data[i];
            const double saved = p;
            p = saved + kFdStep;
            double up = loss();
            p = saved - kFdStep;
            double dn = loss();
            p = saved;
            double fd = (up - dn) / (2.0 * kFdStep);
            worst = std::max(worst, rel_err(gviews[b].data[i], fd, denom_floor));
        }
    }
    return worst;
}

VectorXd randn(Eigen::Index n, Rng& rng) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

SuiteResult suite_backward(std::uint64_t seed) {
    SuiteResult res{"backward", true, 0.0, ""};
    Rng rng(derive_seed(seed, 0xB0));
    using nn::Activation;
    const std::vector<std::pair<Activation, Activation>> combos = {
        {Activation::Tanh, Activation::Identity},
        {Activation::Tanh, Activation::Exp},
        {Activation::Softplus, Activation::Identity},
        {Activation::Tanh, Activation::Tanh},
        {Activation::Identity, Activation::Softplus},
    };
    for (const auto& [hidden, head] : combos) {
        nn::Mlp net = nn::make_mlp({5, 7, 4}, hidden, head, rng, 0.8);
        VectorXd x = randn(5, rng);
        VectorXd og = randn(4, rng);

        nn::MlpCache cache;
        nn::forward(net, x, &cache);
        nn::MlpGrads grads = nn::MlpGrads::zeros_like(net);
        nn::backward(net, cache, og, grads);

        auto scalar = [&]() { return og.dot(nn::forward(net, x)); };
        auto params = nn::param_views(net);
        auto gv = nn::grad_views(grads);
        for (std::size_t b = 0; b < params.size(); ++b)
            for (Eigen::Index i = 0; i < params[b].size; ++i) {
                double& p = params[b].data[i];
                const double saved = p;
                p = saved + kFdStep;
                double up = scalar();
                p = saved - kFdStep;
                double dn = scalar();
                p = saved;
                double fd = (up - dn) / (2.0 * kFdStep);
                res.max_err = std::max(res.max_err, rel_err(gv[b].data[i], fd, 1e-3));
            }
    }
    res.pass = res.max_err <= 1e-5;
    res.detail = "tol 1e-5";
    return res;
}

struct TinyProblem {
    MinVae model;
    VectorXd s_pow;
    VectorXd v;
};

TinyProblem make_tiny(Variant variant, Rng& rng) {
    TinyProblem t;
    ModelArch arch;
    arch.hidden_encoder = 3;
    arch.hidden_decoder = 3;
    t.model = models::make_model(variant, 4, 2, 3, arch, rng, 2);
    t.model.priors.mu_a = randn(2, rng) * 0.3;
    t.model.priors.mu_v = randn(2, rng) * 0.3;
    t.model.priors.log_sigma_a = 0.2;
    t.model.priors.log_sigma_v = -0.1;
    t.s_pow = randn(4, rng).array().abs() + 0.2;
    t.v = randn(3, rng);
    return t;
}

SuiteResult suite_elbo(std::uint64_t seed) {
    SuiteResult res{"elbo", true, 0.0, ""};
    const int kNoiseDraws = 1000;
    for (Variant variant : {Variant::AVae, Variant::VVae, Variant::AvVae}) {
        Rng rng(derive_seed(seed, 0xE1, static_cast<std::uint64_t>(variant)));
        TinyProblem t = make_tiny(variant, rng);
        std::vector<VectorXd> noises;
        noises.reserve(kNoiseDraws);
        for (int k = 0; k < kNoiseDraws; ++k) noises.push_back(randn(t.model.L, rng));

        auto loss = [&]() {
            double acc = 0.0;
            for (const auto& nz : noises) {
                if (variant == Variant::AVae)
                    acc += train::elbo_branch_with_noise(t.model, t.s_pow, t.v, train::Branch::Audio, nz,
                                                  nullptr)
                               .loss;
                else if (variant == Variant::VVae)
                    acc += train::elbo_branch_with_noise(t.model, t.s_pow, t.v, train::Branch::Visual, nz,
                                                  nullptr)
                               .loss;
                else
                    acc += train::elbo_av_with_noise(t.model, t.s_pow, t.v, nz, nullptr).loss;
            }
            return acc / kNoiseDraws;
        };
        auto grad = [&](train::ModelGrads& g) {
            const double w = 1.0 / kNoiseDraws;
            for (const auto& nz : noises) {
                if (variant == Variant::AVae)
                    train::elbo_branch_with_noise(t.model, t.s_pow, t.v, train::Branch::Audio, nz, &g, w);
                else if (variant == Variant::VVae)
                    train::elbo_branch_with_noise(t.model, t.s_pow, t.v, train::Branch::Visual, nz, &g, w);
                else
                    train::elbo_av_with_noise(t.model, t.s_pow, t.v, nz, &g, w);
            }
        };
        res.max_err = std::max(res.max_err, fd_scan(t.model, loss, grad, 1e-3));
    }
    res.pass = res.max_err <= 1e-4;
    res.detail = "a-vae/v-vae/av-vae, tol 1e-4";
    return res;
}

SuiteResult suite_minvae(std::uint64_t seed) {
    SuiteResult res{"minvae", true, 0.0, ""};
    for (Variant variant : {Variant::MinV1, Variant::MinV2}) {
        Rng rng(derive_seed(seed, 0x313, static_cast<std::uint64_t>(variant)));
        TinyProblem t = make_tiny(variant, rng);
        VectorXd na = randn(t.model.L, rng);
        VectorXd nv = randn(t.model.L, rng);
        const double pi_n = 0.3;

        auto loss = [&]() {
            return train::minvae_frame_loss_with_noise(t.model, t.s_pow, t.v, pi_n, na, nv, nullptr);
        };
        auto grad = [&](train::ModelGrads& g) {
            train::minvae_frame_loss_with_noise(t.model, t.s_pow, t.v, pi_n, na, nv, &g);
        };
        res.max_err = std::max(res.max_err, fd_scan(t.model, loss, grad, 1e-3));
    }
    res.pass = res.max_err <= 1e-4;
    res.detail = "min-v1/min-v2 frame loss, tol 1e-4";
    return res;
}

// The detector itself is under test: inject a bias into one analytic gradient
// and require the scan to flag it.
SuiteResult suite_sabotage(std::uint64_t seed) {
    SuiteResult res{"sabotage", false, 0.0, ""};
    Rng rng(derive_seed(seed, 0x5AB0));
    TinyProblem t = make_tiny(Variant::MinV2, rng);
    VectorXd na = randn(t.model.L, rng);
    VectorXd nv = randn(t.model.L, rng);

    auto loss = [&]() {
        return train::minvae_frame_loss_with_noise(t.model, t.s_pow, t.v, 0.4, na, nv, nullptr);
    };
    auto grad = [&](train::ModelGrads& g) {
        train::minvae_frame_loss_with_noise(t.model, t.s_pow, t.v, 0.4, na, nv, &g);
        g.decoder.layers[0].dW(0, 0) += 0.05;  // deliberate corruption
    };
    res.max_err = fd_scan(t.model, loss, grad, 1e-3);
    res.pass = res.max_err > 1e-4;  // the corruption must be detected
    res.detail = "injected gradient corruption must be flagged";
    return res;
}

}  // namespace

const std::vector<std::string>& known_suites() {
    static const std::vector<std::string> names = {"backward", "elbo", "minvae", "sabotage"};
    return names;
}

std::vector<SuiteResult> run_suites(const std::vector<std::string>& suites, std::uint64_t seed) {
    if (suites.empty()) throw InvalidInput("gradcheck: empty suite selection");
    std::vector<SuiteResult> out;
    for (const auto& name : suites) {
        if (name == "backward")
            out.push_back(suite_backward(seed));
        else if (name == "elbo")
            out.push_back(suite_elbo(seed));
        else if (name == "minvae")
            out.push_back(suite_minvae(seed));
        else if (name == "sabotage")
            out.push_back(suite_sabotage(seed));
        else
            throw InvalidInput("gradcheck: unknown suite '" + name + "'");
    }
    return out;
}

}  // namespace minvae::gradcheck
