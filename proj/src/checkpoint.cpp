#include "qdyn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "qdyn/trajectory.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; byte swapping is not implemented");

namespace qdyn {

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'F', '1'};

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& what) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw DataError("checkpoint truncated while reading " + what);
    }
    return value;
}

std::string config_text(const Checkpoint& c) {
    std::ostringstream out;
    out << "T=" << c.cfg.window_len << "\n"
        << "d_p=" << c.cfg.d_p << "\n"
        << "n_heads=" << c.cfg.n_heads << "\n"
        << "n_layers=" << c.cfg.n_layers << "\n"
        << "ffn_hidden=" << c.cfg.ffn_hidden << "\n"
        << "reduce_dim=" << c.cfg.reduce_dim << "\n"
        << "fc1=" << c.cfg.fc1 << "\n"
        << "fc2=" << c.cfg.fc2 << "\n"
        << "ln_eps=" << format_double(c.cfg.ln_eps) << "\n"
        << "pe_base=" << format_double(c.cfg.pe_base) << "\n"
        << "dt=" << format_double(c.cfg.dt) << "\n"
        << "epoch=" << c.epoch << "\n"
        << "best_val_mse=" << format_double(c.best_val_mse) << "\n"
        << "adam_present=" << (c.adam ? 1 : 0) << "\n";
    if (c.adam) {
        out << "adam_lr=" << format_double(c.adam->lr) << "\n"
            << "adam_beta1=" << format_double(c.adam->beta1) << "\n"
            << "adam_beta2=" << format_double(c.adam->beta2) << "\n"
            << "adam_eps=" << format_double(c.adam->eps_hat) << "\n"
            << "adam_step=" << c.adam->step << "\n";
    }
    return out.str();
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("checkpoint config line is not key=value: '" + line + "'");
        }
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv,
                           const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) {
        throw DataError("checkpoint config is missing key '" + key + "'");
    }
    return it->second;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    // Collect all arrays (weights plus optional Adam moments) sorted by name.
    std::map<std::string, const Tensor*> arrays;
    for (const auto& [name, tensor] : checkpoint.params) {
        arrays.emplace(name, &tensor);
    }
    if (checkpoint.adam) {
        for (const auto& [name, tensor] : checkpoint.adam->m) {
            arrays.emplace("adam.m:" + name, &tensor);
        }
        for (const auto& [name, tensor] : checkpoint.adam->v) {
            arrays.emplace("adam.v:" + name, &tensor);
        }
    }

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw DataError("cannot write checkpoint " + tmp.string());
        }
        out.write(kMagic, sizeof(kMagic));
        write_raw<std::uint32_t>(out, kCheckpointVersion);
        const std::string config = config_text(checkpoint);
        write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(config.size()));
        out.write(config.data(), static_cast<std::streamsize>(config.size()));
        write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
        for (const auto& [name, tensor] : arrays) {
            write_raw<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_raw<std::uint8_t>(out, 2);
            write_raw<std::uint64_t>(out, static_cast<std::uint64_t>(tensor->rows()));
            write_raw<std::uint64_t>(out, static_cast<std::uint64_t>(tensor->cols()));
            out.write(reinterpret_cast<const char*>(tensor->data()),
                      static_cast<std::streamsize>(sizeof(double)) * tensor->size());
        }
        if (!out.good()) {
            throw DataError("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open checkpoint " + path.string());
    }
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw DataError(path.string() + " is not a QTF1 checkpoint");
    }
    const auto version = read_raw<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto config_len = read_raw<std::uint32_t>(in, "config length");
    std::string config_str(config_len, '\0');
    in.read(config_str.data(), config_len);
    if (!in) {
        throw DataError("checkpoint truncated in config block");
    }
    const auto kv = parse_config_text(config_str);

    Checkpoint c;
    c.cfg.window_len = std::stoi(require(kv, "T"));
    c.cfg.d_p = std::stoi(require(kv, "d_p"));
    c.cfg.n_heads = std::stoi(require(kv, "n_heads"));
    c.cfg.n_layers = std::stoi(require(kv, "n_layers"));
    c.cfg.ffn_hidden = std::stoi(require(kv, "ffn_hidden"));
    c.cfg.reduce_dim = std::stoi(require(kv, "reduce_dim"));
    c.cfg.fc1 = std::stoi(require(kv, "fc1"));
    c.cfg.fc2 = std::stoi(require(kv, "fc2"));
    c.cfg.ln_eps = std::stod(require(kv, "ln_eps"));
    c.cfg.pe_base = std::stod(require(kv, "pe_base"));
    c.cfg.dt = std::stod(require(kv, "dt"));
    c.cfg.validate();
    c.epoch = std::stoi(require(kv, "epoch"));
    c.best_val_mse = std::stod(require(kv, "best_val_mse"));
    const bool adam_present = std::stoi(require(kv, "adam_present")) != 0;
    if (adam_present) {
        AdamState adam;
        adam.lr = std::stod(require(kv, "adam_lr"));
        adam.beta1 = std::stod(require(kv, "adam_beta1"));
        adam.beta2 = std::stod(require(kv, "adam_beta2"));
        adam.eps_hat = std::stod(require(kv, "adam_eps"));
        adam.step = std::stoll(require(kv, "adam_step"));
        c.adam = std::move(adam);
    }

    const auto array_count = read_raw<std::uint32_t>(in, "array count");
    for (std::uint32_t i = 0; i < array_count; ++i) {
        const auto name_len = read_raw<std::uint16_t>(in, "array name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rank = read_raw<std::uint8_t>(in, "array rank");
        if (rank != 2) {
            throw DataError("array '" + name + "' has unsupported rank " +
                            std::to_string(rank));
        }
        const auto rows = read_raw<std::uint64_t>(in, "rows");
        const auto cols = read_raw<std::uint64_t>(in, "cols");
        std::vector<double> data(rows * cols);
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(sizeof(double) * data.size()));
        if (!in) {
            throw DataError("checkpoint truncated in array '" + name + "'");
        }
        Tensor tensor(static_cast<int>(rows), static_cast<int>(cols), std::move(data));
        if (name.starts_with("adam.m:")) {
            if (!c.adam) {
                throw DataError("moment array '" + name + "' without adam_present");
            }
            c.adam->m.emplace(name.substr(7), std::move(tensor));
        } else if (name.starts_with("adam.v:")) {
            if (!c.adam) {
                throw DataError("moment array '" + name + "' without adam_present");
            }
            c.adam->v.emplace(name.substr(7), std::move(tensor));
        } else {
            c.params.emplace(name, std::move(tensor));
        }
    }

    // The stored arrays must be exactly what the config implies.
    for (const ParamSpec& spec : param_shapes(c.cfg)) {
        auto it = c.params.find(spec.name);
        if (it == c.params.end()) {
            throw DataError("checkpoint is missing parameter '" + spec.name + "'");
        }
        if (it->second.rows() != spec.rows || it->second.cols() != spec.cols) {
            throw DataError("parameter '" + spec.name + "' has shape " +
                            it->second.shape_str() + ", expected " +
                            std::to_string(spec.rows) + "x" + std::to_string(spec.cols));
        }
    }
    if (c.params.size() != param_shapes(c.cfg).size()) {
        throw DataError("checkpoint contains unexpected extra parameters");
    }
    return c;
}

}  // namespace qdyn
