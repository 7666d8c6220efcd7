#include "minvae/corpus_io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace minvae::io {

namespace fs = std::filesystem;
using evaldata::ToyCorpus;
using evaldata::ToyUtterance;
using nlohmann::json;

namespace {

void put_f64(std::string& out, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char b[8];
    std::memcpy(b, &bits, 8);
    out.append(b, 8);
}

double get_f64(const std::string& data, std::size_t& pos) {
    if (pos + 8 > data.size()) throw IoError("corpus file truncated");
    std::uint64_t bits;
    std::memcpy(&bits, data.data() + pos, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    pos += 8;
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write: " + path);
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f) throw IoError("short write: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string matrix_blob(const char* magic, const Eigen::MatrixXd& m) {
    std::string out = magic;
    out += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) put_f64(out, m(r, c));
    return out;
}

Eigen::MatrixXd parse_matrix_blob(const std::string& data, const char* magic) {
    const std::size_t mlen = std::strlen(magic);
    if (data.size() < mlen || data.compare(0, mlen, magic) != 0)
        throw IoError(std::string("bad corpus file magic, expected ") + magic);
    std::size_t nl = data.find('\n', mlen);
    if (nl == std::string::npos) throw IoError("corpus file: missing header");
    std::istringstream hs(data.substr(mlen, nl - mlen));
    Eigen::Index rows = 0, cols = 0;
    if (!(hs >> rows >> cols) || rows < 1 || cols < 1) throw IoError("corpus file: bad dims");
    std::size_t pos = nl + 1;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = get_f64(data, pos);
    if (pos != data.size()) throw IoError("corpus file: trailing bytes");
    return m;
}

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json mat_to_json(const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        a.push_back(row);
    }
    return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

Eigen::MatrixXd mat_from_json(const json& a) {
    if (a.empty()) return {};
    Eigen::MatrixXd m(a.size(), a[0].size());
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t c = 0; c < a[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a[r][c].get<double>();
    return m;
}

}  // namespace

std::string file_checksum(const std::string& path) {
    std::string data = read_file(path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

std::string write_corpus(const ToyCorpus& corpus, const std::string& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "minvae-corpus-1";
    manifest["spec"] = {{"n_utterances", corpus.spec.n_utterances},
                        {"frames_per_utterance", corpus.spec.frames_per_utterance},
                        {"F_toy", corpus.spec.F_toy},
                        {"L_toy", corpus.spec.L_toy},
                        {"M_toy", corpus.spec.M_toy},
                        {"visual_informativeness", corpus.spec.visual_informativeness},
                        {"seed", corpus.spec.seed}};
    manifest["geometry"] = {{"window_len", corpus.spec.window_len()}, {"hop", corpus.spec.hop()}};
    manifest["generator"] = {{"A", mat_to_json(corpus.A)},       {"b", vec_to_json(corpus.b)},
                             {"C", mat_to_json(corpus.C)},       {"mu_a", vec_to_json(corpus.mu_a)},
                             {"mu_v", vec_to_json(corpus.mu_v)}, {"sigma_a", corpus.sigma_a},
                             {"sigma_v", corpus.sigma_v},        {"pi", corpus.pi}};

    json entries = json::array();
    for (std::size_t u = 0; u < corpus.utterances.size(); ++u) {
        const ToyUtterance& utt = corpus.utterances[u];
        std::ostringstream id;
        id << "utt" << std::setw(3) << std::setfill('0') << u;

        // complex frames as stacked re/im rows
        Eigen::MatrixXd spec(2 * utt.frames_raw.rows(), utt.frames_raw.cols());
        spec.topRows(utt.frames_raw.rows()) = utt.frames_raw.real();
        spec.bottomRows(utt.frames_raw.rows()) = utt.frames_raw.imag();
        Eigen::MatrixXd truth(utt.z.rows() + utt.clean_var.rows(), utt.z.cols());
        truth.topRows(utt.z.rows()) = utt.z;
        truth.bottomRows(utt.clean_var.rows()) = utt.clean_var;

        const std::string spec_name = id.str() + ".spec.bin";
        const std::string feat_name = id.str() + ".feat.bin";
        const std::string truth_name = id.str() + ".truth.bin";
        write_file((fs::path(dir) / spec_name).string(), matrix_blob("MINSPEC1\n", spec));
        write_file((fs::path(dir) / feat_name).string(), matrix_blob("MINFEAT1\n", utt.visual));
        write_file((fs::path(dir) / truth_name).string(), matrix_blob("MINTRUTH1\n", truth));

        json e;
        e["id"] = id.str();
        e["spectrogram"] = spec_name;
        e["features"] = feat_name;
        e["truth"] = truth_name;
        e["checksums"] = {{spec_name, file_checksum((fs::path(dir) / spec_name).string())},
                          {feat_name, file_checksum((fs::path(dir) / feat_name).string())},
                          {truth_name, file_checksum((fs::path(dir) / truth_name).string())}};
        entries.push_back(std::move(e));
    }
    manifest["utterances"] = std::move(entries);

    const std::string mpath = (fs::path(dir) / "manifest.json").string();
    write_file(mpath, manifest.dump(2) + "\n");
    return mpath;
}

ToyCorpus load_corpus(const std::string& manifest_path) {
    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::parse_error& e) {
        throw IoError("manifest parse error: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "minvae-corpus-1")
        throw IoError("unsupported corpus format in " + manifest_path);

    ToyCorpus corpus;
    const json& s = manifest.at("spec");
    corpus.spec.n_utterances = s.at("n_utterances").get<int>();
    corpus.spec.frames_per_utterance = s.at("frames_per_utterance").get<int>();
    corpus.spec.F_toy = s.at("F_toy").get<int>();
    corpus.spec.L_toy = s.at("L_toy").get<int>();
    corpus.spec.M_toy = s.at("M_toy").get<int>();
    corpus.spec.visual_informativeness = s.at("visual_informativeness").get<double>();
    corpus.spec.seed = s.at("seed").get<std::uint64_t>();

    const json& g = manifest.at("generator");
    corpus.A = mat_from_json(g.at("A"));
    corpus.b = vec_from_json(g.at("b"));
    corpus.C = mat_from_json(g.at("C"));
    corpus.mu_a = vec_from_json(g.at("mu_a"));
    corpus.mu_v = vec_from_json(g.at("mu_v"));
    corpus.sigma_a = g.at("sigma_a").get<double>();
    corpus.sigma_v = g.at("sigma_v").get<double>();
    corpus.pi = g.at("pi").get<double>();

    const fs::path dir = fs::path(manifest_path).parent_path();
    for (const json& e : manifest.at("utterances")) {
        ToyUtterance utt;
        for (const std::string key : {"spectrogram", "features", "truth"}) {
            const std::string name = e.at(key).get<std::string>();
            const std::string path = (dir / name).string();
            const std::string expect = e.at("checksums").at(name).get<std::string>();
            if (file_checksum(path) != expect)
                throw IoError("corpus checksum mismatch for " + name +
                              " (corrupt or modified file)");
        }
        Eigen::MatrixXd spec = parse_matrix_blob(
            read_file((dir / e.at("spectrogram").get<std::string>()).string()), "MINSPEC1\n");
        const Eigen::Index F = spec.rows() / 2;
        utt.frames_raw.resize(F, spec.cols());
        utt.frames_raw.real() = spec.topRows(F);
        utt.frames_raw.imag() = spec.bottomRows(F);
        utt.visual = parse_matrix_blob(
            read_file((dir / e.at("features").get<std::string>()).string()), "MINFEAT1\n");
        Eigen::MatrixXd truth = parse_matrix_blob(
            read_file((dir / e.at("truth").get<std::string>()).string()), "MINTRUTH1\n");
        utt.z = truth.topRows(corpus.spec.L_toy);
        utt.clean_var = truth.bottomRows(corpus.spec.F_toy);

        dsp::ComplexSpectrogram raw;
        raw.frames = utt.frames_raw;
        raw.window_len = corpus.spec.window_len();
        raw.hop = corpus.spec.hop();
        raw.original_len = (utt.frames_raw.cols() - 1) * static_cast<std::ptrdiff_t>(raw.hop) +
                           raw.window_len;
        utt.wav = dsp::istft(raw);
        utt.frames = dsp::stft(utt.wav, raw.window_len, raw.hop).frames;
        corpus.utterances.push_back(std::move(utt));
    }
    return corpus;
}

}  // namespace minvae::io
