#include "wavefreeze/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "wavefreeze/errors.hpp"

namespace wavefreeze {

static_assert(std::endian::native == std::endian::little, "snapshot format assumes a little-endian host");

void write_snapshot(const std::string& path, const Field& field, double time, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write snapshot " + path);
    out.write(reinterpret_cast<const char*>(field.data()), static_cast<std::streamsize>(field.size() * sizeof(double)));
    const Grid& g = field.grid();
    nlohmann::json meta = {
        {"grid", {{"d", g.d}, {"L", g.L}, {"N", g.N}, {"T_perp", g.T_perp}, {"N_perp", g.N_perp}}},
        {"components", field.components()},
        {"time", time},
        {"seed", seed},
    };
    std::ofstream side(path + ".json");
    side << meta.dump(2) << "\n";
}

Field read_snapshot(const std::string& path, double* time, std::uint64_t* seed) {
    std::ifstream side(path + ".json");
    if (!side) throw ConfigError("missing snapshot sidecar " + path + ".json");
    const nlohmann::json meta = nlohmann::json::parse(side);
    const auto& jg = meta.at("grid");
    const Grid g = Grid::make(jg.at("d"), jg.at("L"), jg.at("N"), jg.at("T_perp"), jg.at("N_perp"));
    Field f(g, meta.at("components").get<int>());
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!in || in.gcount() != static_cast<std::streamsize>(f.size() * sizeof(double)))
        throw ConfigError("snapshot " + path + " is truncated");
    if (time) *time = meta.at("time");
    if (seed) *seed = meta.at("seed");
    return f;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n" << std::setprecision(17);
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

}  // namespace wavefreeze
