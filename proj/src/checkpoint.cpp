#include "slidemil/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "slidemil/binary_io.hpp"
#include "slidemil/errors.hpp"
#include "slidemil/hyperparams.hpp"

namespace slidemil {

namespace {

constexpr char kMagic[4] = {'A', 'B', 'M', 'L'};
constexpr std::uint16_t kVersion = 1;

void write_tensor(std::ostream& out, const Eigen::MatrixXd& mat) {
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
        for (Eigen::Index j = 0; j < mat.cols(); ++j) {
            write_f64_le(out, mat(i, j));
        }
    }
}

void write_tensor(std::ostream& out, const Eigen::VectorXd& vec) {
    for (Eigen::Index i = 0; i < vec.size(); ++i) {
        write_f64_le(out, vec[i]);
    }
}

void read_tensor(std::istream& in, Eigen::MatrixXd& mat) {
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
        for (Eigen::Index j = 0; j < mat.cols(); ++j) {
            mat(i, j) = read_f64_le(in, "parameters");
        }
    }
}

void read_tensor(std::istream& in, Eigen::VectorXd& vec) {
    for (Eigen::Index i = 0; i < vec.size(); ++i) {
        vec[i] = read_f64_le(in, "parameters");
    }
}

}  // namespace

void write_checkpoint(const AbmilParams& params, const TrainConfig& config,
                      const std::string& path) {
    params.check_finite();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write checkpoint '" + path + "'");
    }
    out.write(kMagic, 4);
    write_u16_le(out, kVersion);
    write_u32_le(out, static_cast<std::uint32_t>(params.dim()));
    write_u32_le(out, static_cast<std::uint32_t>(params.m1()));
    write_u32_le(out, static_cast<std::uint32_t>(params.m2()));
    write_u32_le(out, static_cast<std::uint32_t>(params.k()));
    write_tensor(out, params.w1);
    write_tensor(out, params.b1);
    write_tensor(out, params.v);
    write_tensor(out, params.bv);
    write_tensor(out, params.w);
    write_tensor(out, params.w2);
    write_tensor(out, params.b2);

    std::ostringstream cfg;
    for (const auto& [key, value] : train_config_to_kv(config)) {
        cfg << key << '=' << value << '\n';
    }
    const std::string cfg_text = cfg.str();
    write_u32_le(out, static_cast<std::uint32_t>(cfg_text.size()));
    out.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));
    if (!out) {
        throw io_error("failed writing checkpoint '" + path + "'");
    }
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open checkpoint '" + path + "'");
    }
    char magic[4];
    read_exact(in, magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw format_error("'" + path + "' is not an ABML checkpoint (bad magic)");
    }
    const std::uint16_t version = read_u16_le(in, "version");
    if (version != kVersion) {
        throw format_error("'" + path + "': unsupported checkpoint version " +
                           std::to_string(version));
    }
    const std::uint32_t dim = read_u32_le(in, "dim");
    const std::uint32_t m1 = read_u32_le(in, "m1");
    const std::uint32_t m2 = read_u32_le(in, "m2");
    const std::uint32_t k = read_u32_le(in, "k");
    if (dim == 0 || m1 == 0 || m2 == 0 || k == 0) {
        throw format_error("'" + path + "': zero dimensions in checkpoint header");
    }

    Checkpoint ckpt;
    ckpt.params = AbmilParams::zeros(dim, static_cast<int>(m1), static_cast<int>(m2),
                                     static_cast<int>(k));
    read_tensor(in, ckpt.params.w1);
    read_tensor(in, ckpt.params.b1);
    read_tensor(in, ckpt.params.v);
    read_tensor(in, ckpt.params.bv);
    read_tensor(in, ckpt.params.w);
    read_tensor(in, ckpt.params.w2);
    read_tensor(in, ckpt.params.b2);
    ckpt.params.check_finite();

    const std::uint32_t cfg_len = read_u32_le(in, "config length");
    std::string cfg_text(cfg_len, '\0');
    read_exact(in, cfg_text.data(), cfg_len, "config");

    std::map<std::string, std::string> kv;
    std::istringstream cfg(cfg_text);
    std::string line;
    while (std::getline(cfg, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw format_error("'" + path + "': malformed config line '" + line + "'");
        }
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    ckpt.config = train_config_from_kv(kv);
    return ckpt;
}

}  // namespace slidemil
