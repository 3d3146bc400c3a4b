#include "evomas/checkpoint.hpp"

#include "evomas/errors.hpp"
#include "evomas/rng.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace evomas {

namespace {

constexpr char kMagic[] = "evomas-checkpoint v1";

std::string format_scalar(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void append_le_doubles(std::string& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            double v = m(r, c);
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            if constexpr (std::endian::native == std::endian::big) {
                bits = __builtin_bswap64(bits);
            }
            char raw[8];
            std::memcpy(raw, &bits, 8);
            out.append(raw, 8);
        }
    }
}

void read_le_doubles(const std::string& payload, std::size_t& offset,
                     Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (offset + 8 > payload.size()) {
                throw CheckpointError("checkpoint payload truncated");
            }
            std::uint64_t bits;
            std::memcpy(&bits, payload.data() + offset, 8);
            if constexpr (std::endian::native == std::endian::big) {
                bits = __builtin_bswap64(bits);
            }
            double v;
            std::memcpy(&v, &bits, sizeof(v));
            m(r, c) = v;
            offset += 8;
        }
    }
}

} // namespace

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path) {
    const AdapterParams& p = checkpoint.params;

    std::string payload;
    append_le_doubles(payload, p.embeddings);
    append_le_doubles(payload, p.w_query);
    append_le_doubles(payload, p.w_key);
    append_le_doubles(payload, p.w_value);
    std::uint64_t payload_hash = fnv1a_bytes(payload.data(), payload.size());

    std::ostringstream header;
    header << kMagic << "\n";
    header << "config_hash " << to_hex(checkpoint.config_hash) << "\n";
    header << "trajectories " << checkpoint.trajectories << "\n";
    header << "rng_digest " << to_hex(checkpoint.rng_digest) << "\n";
    header << "temperature " << format_scalar(p.temperature) << "\n";
    header << "mass_threshold " << format_scalar(p.mass_threshold) << "\n";
    header << "max_layers " << p.max_layers << "\n";
    header << "scale_attention " << (p.scale_attention ? 1 : 0) << "\n";
    header << "array E " << p.embeddings.rows() << " " << p.embeddings.cols() << "\n";
    header << "array W_Q " << p.w_query.rows() << " " << p.w_query.cols() << "\n";
    header << "array W_K " << p.w_key.rows() << " " << p.w_key.cols() << "\n";
    header << "array W_V " << p.w_value.rows() << " " << p.w_value.cols() << "\n";
    header << "payload_hash " << to_hex(payload_hash) << "\n";
    header << "end-header\n";

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open checkpoint for writing: " +
                                    path.string());
    out << header.str();
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw CheckpointError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string content = buffer.str();

    std::size_t header_end = content.find("end-header\n");
    if (header_end == std::string::npos) {
        throw CheckpointError("checkpoint header terminator missing");
    }
    std::istringstream header(content.substr(0, header_end));
    std::string payload = content.substr(header_end + std::strlen("end-header\n"));

    std::string line;
    if (!std::getline(header, line) || line != kMagic) {
        throw CheckpointError("unrecognized checkpoint format/version");
    }

    Checkpoint checkpoint;
    AdapterParams& p = checkpoint.params;
    std::uint64_t expected_payload_hash = 0;
    std::vector<std::pair<std::string, std::pair<long, long>>> arrays;

    while (std::getline(header, line)) {
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        if (key == "config_hash") {
            std::string hex;
            fields >> hex;
            checkpoint.config_hash = from_hex(hex);
        } else if (key == "trajectories") {
            fields >> checkpoint.trajectories;
        } else if (key == "rng_digest") {
            std::string hex;
            fields >> hex;
            checkpoint.rng_digest = from_hex(hex);
        } else if (key == "temperature") {
            fields >> p.temperature;
        } else if (key == "mass_threshold") {
            fields >> p.mass_threshold;
        } else if (key == "max_layers") {
            fields >> p.max_layers;
        } else if (key == "scale_attention") {
            int v = 1;
            fields >> v;
            p.scale_attention = v != 0;
        } else if (key == "array") {
            std::string name;
            long rows = 0, cols = 0;
            fields >> name >> rows >> cols;
            if (rows < 1 || cols < 1) {
                throw CheckpointError("bad array shape in checkpoint header");
            }
            arrays.emplace_back(name, std::make_pair(rows, cols));
        } else if (key == "payload_hash") {
            std::string hex;
            fields >> hex;
            expected_payload_hash = from_hex(hex);
        } else if (!key.empty()) {
            throw CheckpointError("unknown checkpoint header key: " + key);
        }
        if (fields.fail()) {
            throw CheckpointError("malformed checkpoint header line: " + line);
        }
    }

    std::uint64_t actual_hash = fnv1a_bytes(payload.data(), payload.size());
    if (actual_hash != expected_payload_hash) {
        throw CheckpointError("checkpoint payload hash mismatch");
    }

    std::size_t offset = 0;
    for (const auto& [name, shape] : arrays) {
        Eigen::MatrixXd* target = nullptr;
        if (name == "E") target = &p.embeddings;
        else if (name == "W_Q") target = &p.w_query;
        else if (name == "W_K") target = &p.w_key;
        else if (name == "W_V") target = &p.w_value;
        else throw CheckpointError("unknown array in checkpoint: " + name);
        target->resize(shape.first, shape.second);
        read_le_doubles(payload, offset, *target);
    }
    if (offset != payload.size()) {
        throw CheckpointError("checkpoint payload has trailing bytes");
    }
    p.validate();
    return checkpoint;
}

} // namespace evomas
