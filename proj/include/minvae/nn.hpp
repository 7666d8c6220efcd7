#ifndef MINVAE_NN_HPP_
#define MINVAE_NN_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "minvae/common.hpp"

namespace minvae::nn {

enum class Activation { Identity, Tanh, Exp, Softplus };

const char* activation_name(Activation a);

struct DenseLayer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;  // out
    Activation act = Activation::Identity;

    Eigen::Index in_dim() const { return W.cols(); }
    Eigen::Index out_dim() const { return W.rows(); }
};

struct Mlp {
    std::vector<DenseLayer> layers;

    Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    Eigen::Index output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
    /// Checks that adjacent layer dimensions chain correctly.
    void validate() const;
};

/// Builds dims.size()-1 dense layers; hidden layers use `hidden_act`, the
/// last layer uses `head_act`. Weights ~ N(0, scale^2/in_dim), biases zero.
Mlp make_mlp(const std::vector<Eigen::Index>& dims, Activation hidden_act, Activation head_act,
             Rng& rng, double weight_scale = 1.0);

/// Forward intermediates for one input; consumed by backward().
struct MlpCache {
    Eigen::VectorXd input;
    std::vector<Eigen::VectorXd> pre;   // pre-activation per layer
    std::vector<Eigen::VectorXd> post;  // activated output per layer
};

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& x, MlpCache* cache = nullptr);

struct LayerGrads {
    Eigen::MatrixXd dW;
    Eigen::VectorXd db;
};

struct MlpGrads {
    std::vector<LayerGrads> layers;

    static MlpGrads zeros_like(const Mlp& net);
    void set_zero();
    void add_scaled(const MlpGrads& other, double s);
};

/// Reverse-mode gradients of forward(); accumulates parameter gradients into
/// `grads` and returns d(loss)/d(input). The cache must come from a
/// forward() call on this network.
Eigen::VectorXd backward(const Mlp& net, const MlpCache& cache, const Eigen::VectorXd& output_grad,
                         MlpGrads& grads);

// ---- Adam ----------------------------------------------------------------

/// Flat view of one trainable tensor (Eigen storage is contiguous).
struct ParamView {
    double* data = nullptr;
    Eigen::Index size = 0;
};
struct ConstParamView {
    const double* data = nullptr;
    Eigen::Index size = 0;
};

std::vector<ParamView> param_views(Mlp& net);
std::vector<ConstParamView> grad_views(const MlpGrads& grads);

struct AdamState {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step_count = 0;
    std::vector<Eigen::ArrayXd> m;  // first moments, one per parameter block
    std::vector<Eigen::ArrayXd> v;  // second moments
};

AdamState make_adam(const std::vector<ParamView>& params, double learning_rate = 1e-4);

/// One Adam update. `active`, when given, selects which blocks move; skipped
/// blocks keep their moments untouched. Throws NumericalError (before any
/// mutation) if an active gradient is non-finite.
void adam_step(const std::vector<ParamView>& params, const std::vector<ConstParamView>& grads,
               AdamState& state, const std::vector<bool>* active = nullptr);

// ---- Reparameterized sampling ---------------------------------------------

struct GaussianSample {
    Eigen::VectorXd value;
    Eigen::VectorXd noise;  // the standard-normal draw, kept for the gradient pass
};

/// value = mean + sqrt(variance) .* noise with noise ~ N(0, I).
GaussianSample sample_gaussian_reparam(const Eigen::VectorXd& mean, const Eigen::VectorXd& variance,
                                       Rng& rng);

/// Same reparameterization with caller-supplied noise (frozen-noise gradient
/// checks, deterministic replay).
Eigen::VectorXd reparam_with_noise(const Eigen::VectorXd& mean, const Eigen::VectorXd& variance,
                                   const Eigen::VectorXd& noise);

}  // namespace minvae::nn

#endif  // MINVAE_NN_HPP_
