#include "minvae/nn.hpp"

#include <cmath>

namespace minvae::nn {

namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

Eigen::VectorXd apply_act(Activation act, const Eigen::VectorXd& z) {
    switch (act) {
        case Activation::Identity:
            return z;
        case Activation::Tanh:
            return z.array().tanh();
        case Activation::Exp:
            return z.array().exp();
        case Activation::Softplus:
            return z.unaryExpr([](double x) { return softplus(x); });
    }
    throw InvalidState("unknown activation");
}

// derivative expressed through pre-activation z and activated value y
Eigen::VectorXd act_deriv(Activation act, const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
    switch (act) {
        case Activation::Identity:
            return Eigen::VectorXd::Ones(z.size());
        case Activation::Tanh:
            return (1.0 - y.array().square()).matrix();
        case Activation::Exp:
            return y;
        case Activation::Softplus:
            return z.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    }
    throw InvalidState("unknown activation");
}

}  // namespace

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity:
            return "identity";
        case Activation::Tanh:
            return "tanh";
        case Activation::Exp:
            return "exp";
        case Activation::Softplus:
            return "softplus";
    }
    return "?";
}

void Mlp::validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].W.rows() != layers[i].b.size())
            throw InvalidInput("Mlp: bias size mismatch in layer " + std::to_string(i));
        if (i > 0 && layers[i].in_dim() != layers[i - 1].out_dim())
            throw InvalidInput("Mlp: layer dimensions do not chain at layer " + std::to_string(i));
    }
}

Mlp make_mlp(const std::vector<Eigen::Index>& dims, Activation hidden_act, Activation head_act,
             Rng& rng, double weight_scale) {
    if (dims.size() < 2) throw InvalidInput("make_mlp: need at least input and output dims");
    Mlp net;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer layer;
        layer.W.resize(dims[i + 1], dims[i]);
        double s = weight_scale / std::sqrt(static_cast<double>(dims[i]));
        for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.W.cols(); ++c) layer.W(r, c) = s * rng.normal();
        layer.b = Eigen::VectorXd::Zero(dims[i + 1]);
        layer.act = (i + 2 == dims.size()) ? head_act : hidden_act;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& x, MlpCache* cache) {
    if (net.layers.empty()) throw InvalidInput("forward: empty network");
    if (x.size() != net.input_dim())
        throw InvalidInput("forward: input has size " + std::to_string(x.size()) + ", expected " +
                           std::to_string(net.input_dim()));
    if (cache != nullptr) {
        cache->input = x;
        cache->pre.clear();
        cache->post.clear();
    }
    Eigen::VectorXd h = x;
    for (const auto& layer : net.layers) {
        Eigen::VectorXd z = layer.W * h + layer.b;
        h = apply_act(layer.act, z);
        if (cache != nullptr) {
            cache->pre.push_back(std::move(z));
            cache->post.push_back(h);
        }
    }
    return h;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
    MlpGrads g;
    g.layers.reserve(net.layers.size());
    for (const auto& layer : net.layers) {
        LayerGrads lg;
        lg.dW = Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols());
        lg.db = Eigen::VectorXd::Zero(layer.b.size());
        g.layers.push_back(std::move(lg));
    }
    return g;
}

void MlpGrads::set_zero() {
    for (auto& lg : layers) {
        lg.dW.setZero();
        lg.db.setZero();
    }
}

void MlpGrads::add_scaled(const MlpGrads& other, double s) {
    if (other.layers.size() != layers.size()) throw InvalidInput("MlpGrads: shape mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].dW += s * other.layers[i].dW;
        layers[i].db += s * other.layers[i].db;
    }
}

Eigen::VectorXd backward(const Mlp& net, const MlpCache& cache, const Eigen::VectorXd& output_grad,
                         MlpGrads& grads) {
    const std::size_t n = net.layers.size();
    if (cache.pre.size() != n || cache.post.size() != n ||
        cache.input.size() != net.input_dim())
        throw InvalidState("backward: cache does not match network");
    if (grads.layers.size() != n) throw InvalidState("backward: gradient holder shape mismatch");
    if (output_grad.size() != net.output_dim())
        throw InvalidInput("backward: output_grad size mismatch");
    for (std::size_t i = 0; i < n; ++i)
        if (cache.pre[i].size() != net.layers[i].out_dim())
            throw InvalidState("backward: cache layer size mismatch");

    Eigen::VectorXd g = output_grad;
    for (std::size_t i = n; i-- > 0;) {
        const auto& layer = net.layers[i];
        Eigen::VectorXd dz = g.cwiseProduct(act_deriv(layer.act, cache.pre[i], cache.post[i]));
        const Eigen::VectorXd& in = (i == 0) ? cache.input : cache.post[i - 1];
        grads.layers[i].dW.noalias() += dz * in.transpose();
        grads.layers[i].db += dz;
        g.noalias() = layer.W.transpose() * dz;
    }
    return g;
}

std::vector<ParamView> param_views(Mlp& net) {
    std::vector<ParamView> out;
    for (auto& layer : net.layers) {
        out.push_back({layer.W.data(), layer.W.size()});
        out.push_back({layer.b.data(), layer.b.size()});
    }
    return out;
}

std::vector<ConstParamView> grad_views(const MlpGrads& grads) {
    std::vector<ConstParamView> out;
    for (const auto& lg : grads.layers) {
        out.push_back({lg.dW.data(), lg.dW.size()});
        out.push_back({lg.db.data(), lg.db.size()});
    }
    return out;
}

AdamState make_adam(const std::vector<ParamView>& params, double learning_rate) {
    AdamState st;
    st.learning_rate = learning_rate;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const auto& p : params) {
        st.m.emplace_back(Eigen::ArrayXd::Zero(p.size));
        st.v.emplace_back(Eigen::ArrayXd::Zero(p.size));
    }
    return st;
}

void adam_step(const std::vector<ParamView>& params, const std::vector<ConstParamView>& grads,
               AdamState& state, const std::vector<bool>* active) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw InvalidInput("adam_step: block count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size != grads[i].size || params[i].size != state.m[i].size())
            throw InvalidInput("adam_step: block size mismatch");
        if (active != nullptr && !(*active)[i]) continue;
        Eigen::Map<const Eigen::ArrayXd> g(grads[i].data, grads[i].size);
        if (!g.isFinite().all()) throw NumericalError("adam_step: non-finite gradient");
    }

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (active != nullptr && !(*active)[i]) continue;
        Eigen::Map<Eigen::ArrayXd> p(params[i].data, params[i].size);
        Eigen::Map<const Eigen::ArrayXd> g(grads[i].data, grads[i].size);
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.square();
        p -= state.learning_rate * (state.m[i] / bc1) / ((state.v[i] / bc2).sqrt() + state.epsilon);
    }
}

GaussianSample sample_gaussian_reparam(const Eigen::VectorXd& mean, const Eigen::VectorXd& variance,
                                       Rng& rng) {
    if (mean.size() != variance.size())
        throw InvalidInput("sample_gaussian_reparam: size mismatch");
    if ((variance.array() <= 0.0).any())
        throw InvalidInput("sample_gaussian_reparam: variance must be positive");
    GaussianSample s;
    s.noise.resize(mean.size());
    for (Eigen::Index i = 0; i < s.noise.size(); ++i) s.noise(i) = rng.normal();
    s.value = reparam_with_noise(mean, variance, s.noise);
    return s;
}

Eigen::VectorXd reparam_with_noise(const Eigen::VectorXd& mean, const Eigen::VectorXd& variance,
                                   const Eigen::VectorXd& noise) {
    if (mean.size() != variance.size() || mean.size() != noise.size())
        throw InvalidInput("reparam_with_noise: size mismatch");
    return mean.array() + variance.array().sqrt() * noise.array();
}

}  // namespace minvae::nn
