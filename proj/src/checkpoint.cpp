#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "depthkit/network.hpp"

namespace dk {

namespace {

constexpr const char* kMagic = "DFKT1";

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string join_taps(const std::vector<std::string>& taps) {
    std::string out;
    for (std::size_t i = 0; i < taps.size(); ++i) {
        if (i) out += ",";
        out += taps[i];
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

void encode_f32_le(float f, std::string& out) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
    out.push_back(static_cast<char>(bits & 0xff));
    out.push_back(static_cast<char>((bits >> 8) & 0xff));
    out.push_back(static_cast<char>((bits >> 16) & 0xff));
    out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

float decode_f32_le(const unsigned char* p) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                               (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) |
                               (static_cast<std::uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(bits);
}

}  // namespace

std::string serialize_config(const ModelConfig& c) {
    std::ostringstream os;
    os << "repeats_a=" << c.repeats_a << "\n"
       << "repeats_b=" << c.repeats_b << "\n"
       << "repeats_c=" << c.repeats_c << "\n"
       << "width_factor=" << fmt_double(c.width_factor) << "\n"
       << "in_channels=" << c.in_channels << "\n"
       << "in_h=" << c.in_h << "\n"
       << "in_w=" << c.in_w << "\n"
       << "decoder_levels=" << c.decoder_levels << "\n"
       << "leaky_alpha=" << fmt_double(c.leaky_alpha) << "\n"
       << "residual_scale=" << fmt_double(c.residual_scale) << "\n"
       << "channel_budget=" << c.channel_budget << "\n"
       << "head_bias=" << fmt_double(c.head_bias) << "\n"
       << "skip_taps=" << join_taps(c.skip_taps) << "\n";
    return os.str();
}

ModelConfig parse_config(const std::string& text) {
    ModelConfig c;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '[' || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CheckpointError("config: malformed line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        try {
            if (key == "repeats_a") c.repeats_a = std::stoi(val);
            else if (key == "repeats_b") c.repeats_b = std::stoi(val);
            else if (key == "repeats_c") c.repeats_c = std::stoi(val);
            else if (key == "width_factor") c.width_factor = std::stod(val);
            else if (key == "in_channels") c.in_channels = std::stoi(val);
            else if (key == "in_h") c.in_h = std::stoi(val);
            else if (key == "in_w") c.in_w = std::stoi(val);
            else if (key == "decoder_levels") c.decoder_levels = std::stoi(val);
            else if (key == "leaky_alpha") c.leaky_alpha = std::stod(val);
            else if (key == "residual_scale") c.residual_scale = std::stod(val);
            else if (key == "channel_budget") c.channel_budget = std::stoi(val);
            else if (key == "head_bias") c.head_bias = std::stod(val);
            else if (key == "skip_taps") c.skip_taps = split(val, ',');
            else if (key == "param_count") { /* validated by the loader */ }
            else throw CheckpointError("config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw CheckpointError("config: bad value for '" + key + "': " + val);
        }
    }
    return c;
}

void save_checkpoint(const Model<float>& model, const std::string& path) {
    std::string header;
    header += kMagic;
    header += "\n[config]\n";
    header += serialize_config(model.config());
    header += "param_count=" + std::to_string(model.parameter_count()) + "\n";
    header += "[manifest]\n";
    for (const auto& p : model.parameters()) {
        const Shape& s = p.tensor.shape();
        header += p.name + " " + std::to_string(s.n) + " " + std::to_string(s.c) + " " +
                  std::to_string(s.h) + " " + std::to_string(s.w) + "\n";
    }
    header += "[blob]\n";

    std::string blob;
    blob.reserve(static_cast<std::size_t>(model.parameter_count()) * 4);
    for (const auto& p : model.parameters())
        for (float v : p.tensor.data()) encode_f32_le(v, blob);

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("save_checkpoint: cannot open '" + path + "' for writing");
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!os) throw IoError("save_checkpoint: write failed for '" + path + "'");
}

Model<float> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_checkpoint: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    const std::string magic_line = std::string(kMagic) + "\n";
    if (bytes.size() < magic_line.size() || bytes.compare(0, magic_line.size(), magic_line) != 0)
        throw CheckpointError("load_checkpoint: bad magic, not a checkpoint or wrong version");

    const std::string marker = "[blob]\n";
    const auto blob_at = bytes.find(marker);
    if (blob_at == std::string::npos)
        throw CheckpointError("load_checkpoint: missing blob section");
    const std::string header = bytes.substr(0, blob_at);
    const std::size_t blob_off = blob_at + marker.size();

    const auto manifest_at = header.find("[manifest]\n");
    if (manifest_at == std::string::npos)
        throw CheckpointError("load_checkpoint: missing manifest section");

    long long declared = -1;
    {
        const auto at = header.find("param_count=");
        if (at == std::string::npos)
            throw CheckpointError("load_checkpoint: missing param_count");
        declared = std::stoll(header.substr(at + 12));
    }

    ModelConfig config =
        parse_config(header.substr(magic_line.size(), manifest_at - magic_line.size()));
    Model<float> model(config, 0);
    if (model.parameter_count() != declared)
        throw CheckpointError("load_checkpoint: param_count " + std::to_string(declared) +
                              " does not match config-derived count " +
                              std::to_string(model.parameter_count()));

    // manifest must agree with the rebuilt model tensor-for-tensor
    {
        std::istringstream ms(header.substr(manifest_at + 11));
        std::string line;
        std::size_t idx = 0;
        const auto& params = model.parameters();
        while (std::getline(ms, line)) {
            if (line.empty()) continue;
            if (idx >= params.size())
                throw CheckpointError("load_checkpoint: manifest has extra entries");
            std::istringstream ls(line);
            std::string name;
            Shape s;
            ls >> name >> s.n >> s.c >> s.h >> s.w;
            if (!ls || name != params[idx].name || !(s == params[idx].tensor.shape()))
                throw CheckpointError("load_checkpoint: manifest mismatch at '" + line +
                                      "', expected '" + params[idx].name + " " +
                                      params[idx].tensor.shape().str() + "'");
            ++idx;
        }
        if (idx != params.size())
            throw CheckpointError("load_checkpoint: manifest is missing entries");
    }

    const std::size_t want_bytes = static_cast<std::size_t>(declared) * 4;
    if (bytes.size() - blob_off != want_bytes)
        throw CheckpointError("load_checkpoint: blob has " +
                              std::to_string(bytes.size() - blob_off) + " bytes, expected " +
                              std::to_string(want_bytes) + " (truncated or padded file)");

    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + blob_off;
    for (auto& param : model.parameters()) {
        auto dst = param.tensor.raw();
        for (auto& v : dst) {
            v = decode_f32_le(p);
            p += 4;
        }
    }
    return model;
}

}  // namespace dk
