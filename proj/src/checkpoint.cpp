#include "minvae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "minvae/train.hpp"

namespace minvae::io {

using models::MinVae;

namespace {

constexpr char kMagic[] = "MINVAE1\n";
constexpr char kStateMagic[] = "MINVAE1S\n";

void put_f64(std::vector<char>& out, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char b[8];
    std::memcpy(b, &bits, 8);
    out.insert(out.end(), b, b + 8);
}

class F64Reader {
  public:
    F64Reader(const char* data, std::size_t len) : data_(data), len_(len) {}
    double next() {
        if (pos_ + 8 > len_) throw IoError("checkpoint: truncated parameter data");
        std::uint64_t bits;
        std::memcpy(&bits, data_ + pos_, 8);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        pos_ += 8;
        double x;
        std::memcpy(&x, &bits, 8);
        return x;
    }
    bool exhausted() const { return pos_ == len_; }

  private:
    const char* data_;
    std::size_t len_;
    std::size_t pos_ = 0;
};

void write_mlp(std::vector<char>& out, const nn::Mlp& net) {
    for (const auto& layer : net.layers) {
        for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.W.cols(); ++c) put_f64(out, layer.W(r, c));
        for (Eigen::Index i = 0; i < layer.b.size(); ++i) put_f64(out, layer.b(i));
    }
}

void read_mlp(F64Reader& in, nn::Mlp& net) {
    for (auto& layer : net.layers) {
        for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.W.cols(); ++c) layer.W(r, c) = in.next();
        for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b(i) = in.next();
    }
}

int hidden_width(const nn::Mlp& net) {
    return net.layers.size() > 1 ? static_cast<int>(net.layers.front().out_dim()) : 0;
}

}  // namespace

void save_checkpoint(const MinVae& m, const std::string& path) {
    m.validate();
    int h_enc = 0;
    if (m.has_audio_encoder())
        h_enc = hidden_width(m.audio_encoder);
    else if (m.has_visual_encoder())
        h_enc = hidden_width(m.visual_encoder);
    int h_dec = hidden_width(m.decoder);

    std::ostringstream header;
    header << kMagic << m.F << ' ' << m.L << ' ' << m.M << ' ' << m.nmf_rank << ' '
           << models::variant_name(m.variant) << ' ' << h_enc << ' ' << h_dec << '\n';

    std::vector<char> body;
    write_mlp(body, m.audio_encoder);
    write_mlp(body, m.visual_encoder);
    write_mlp(body, m.decoder);
    write_mlp(body, m.prior_net);
    for (Eigen::Index i = 0; i < m.priors.mu_a.size(); ++i) put_f64(body, m.priors.mu_a(i));
    put_f64(body, m.priors.log_sigma_a);
    for (Eigen::Index i = 0; i < m.priors.mu_v.size(); ++i) put_f64(body, m.priors.mu_v(i));
    put_f64(body, m.priors.log_sigma_v);
    put_f64(body, m.priors.pi);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    const std::string h = header.str();
    f.write(h.data(), static_cast<std::streamsize>(h.size()));
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw IoError("short write: " + path);
}

MinVae load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    std::vector<char> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    const std::size_t magic_len = sizeof(kMagic) - 1;
    if (data.size() < magic_len || std::memcmp(data.data(), kMagic, magic_len) != 0)
        throw IoError("not a MINVAE1 checkpoint: " + path);
    auto nl = std::find(data.begin() + static_cast<std::ptrdiff_t>(magic_len), data.end(), '\n');
    if (nl == data.end()) throw IoError("checkpoint: missing header line: " + path);
    std::string header(data.begin() + static_cast<std::ptrdiff_t>(magic_len), nl);

    std::istringstream hs(header);
    long F = 0, L = 0, M = 0;
    int K = 0, h_enc = 0, h_dec = 0;
    std::string variant;
    if (!(hs >> F >> L >> M >> K >> variant >> h_enc >> h_dec))
        throw IoError("checkpoint: malformed header: " + header);

    Rng dummy(0);
    models::ModelArch arch;
    arch.hidden_encoder = h_enc;
    arch.hidden_decoder = h_dec;
    MinVae m = models::make_model(models::variant_from_name(variant), F, L, M, arch, dummy, K);

    const char* body = data.data() + std::distance(data.begin(), nl) + 1;
    std::size_t body_len = data.size() - static_cast<std::size_t>(body - data.data());
    F64Reader in(body, body_len);
    read_mlp(in, m.audio_encoder);
    read_mlp(in, m.visual_encoder);
    read_mlp(in, m.decoder);
    read_mlp(in, m.prior_net);
    for (Eigen::Index i = 0; i < m.priors.mu_a.size(); ++i) m.priors.mu_a(i) = in.next();
    m.priors.log_sigma_a = in.next();
    for (Eigen::Index i = 0; i < m.priors.mu_v.size(); ++i) m.priors.mu_v(i) = in.next();
    m.priors.log_sigma_v = in.next();
    m.priors.pi = in.next();
    if (!in.exhausted()) throw IoError("checkpoint: trailing bytes: " + path);
    m.validate();
    return m;
}

void save_train_state(const TrainState& st, const std::string& path) {
    std::vector<char> body;
    put_f64(body, static_cast<double>(st.epochs_done));
    put_f64(body, st.adam.learning_rate);
    put_f64(body, st.adam.beta1);
    put_f64(body, st.adam.beta2);
    put_f64(body, st.adam.epsilon);
    put_f64(body, static_cast<double>(st.adam.step_count));
    put_f64(body, static_cast<double>(st.adam.m.size()));
    for (std::size_t i = 0; i < st.adam.m.size(); ++i) {
        put_f64(body, static_cast<double>(st.adam.m[i].size()));
        for (Eigen::Index j = 0; j < st.adam.m[i].size(); ++j) put_f64(body, st.adam.m[i](j));
        for (Eigen::Index j = 0; j < st.adam.v[i].size(); ++j) put_f64(body, st.adam.v[i](j));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write train state: " + path);
    f.write(kStateMagic, sizeof(kStateMagic) - 1);
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw IoError("short write: " + path);
}

TrainState load_train_state(const std::string& path, MinVae& model) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open train state: " + path);
    std::vector<char> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const std::size_t magic_len = sizeof(kStateMagic) - 1;
    if (data.size() < magic_len || std::memcmp(data.data(), kStateMagic, magic_len) != 0)
        throw IoError("not a MINVAE1S train state: " + path);
    F64Reader in(data.data() + magic_len, data.size() - magic_len);

    TrainState st;
    st.epochs_done = static_cast<int>(in.next());
    st.adam.learning_rate = in.next();
    st.adam.beta1 = in.next();
    st.adam.beta2 = in.next();
    st.adam.epsilon = in.next();
    st.adam.step_count = static_cast<std::int64_t>(in.next());
    auto blocks = static_cast<std::size_t>(in.next());

    auto params = train::model_param_views(model);
    if (blocks != params.size()) throw IoError("train state: block count mismatch: " + path);
    st.adam.m.resize(blocks);
    st.adam.v.resize(blocks);
    for (std::size_t i = 0; i < blocks; ++i) {
        auto n = static_cast<Eigen::Index>(in.next());
        if (n != params[i].size) throw IoError("train state: block size mismatch: " + path);
        st.adam.m[i].resize(n);
        st.adam.v[i].resize(n);
        for (Eigen::Index j = 0; j < n; ++j) st.adam.m[i](j) = in.next();
        for (Eigen::Index j = 0; j < n; ++j) st.adam.v[i](j) = in.next();
    }
    if (!in.exhausted()) throw IoError("train state: trailing bytes: " + path);
    return st;
}

}  // namespace minvae::io
