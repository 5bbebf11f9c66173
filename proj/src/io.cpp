#include "gwmut/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "gwmut/error.hpp"

namespace gwmut {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

nlohmann::json law_to_json(const OffspringLaw& law, std::optional<double> p) {
    nlohmann::json j;
    j["probs"] = law.probs();
    if (law.tail())
        j["tail"] = {{"alpha", law.tail()->alpha}, {"scale", law.tail()->scale}};
    else
        j["tail"] = nullptr;
    j["truncation_mass"] = law.truncation_mass();
    if (p) j["p"] = *p;
    return j;
}

OffspringLaw law_from_json(const nlohmann::json& j, std::optional<double>* p) {
    if (!j.is_object() || !j.contains("probs") || !j["probs"].is_array())
        throw Error(ErrorKind::InvalidLaw, "law JSON needs a \"probs\" array");
    std::vector<double> probs = j["probs"].get<std::vector<double>>();
    std::optional<ParetoTail> tail;
    if (j.contains("tail") && !j["tail"].is_null())
        tail = ParetoTail{j["tail"].at("alpha").get<double>(), j["tail"].at("scale").get<double>()};
    const double trunc = j.value("truncation_mass", 0.0);
    if (p) *p = j.contains("p") ? std::optional<double>(j["p"].get<double>()) : std::nullopt;
    return OffspringLaw::from_probs(std::move(probs), tail, trunc);
}

OffspringLaw parse_law_spec(const std::string& spec, std::optional<double>* p) {
    if (p) *p = std::nullopt;
    if (spec == "lstar") {
        if (p) *p = 0.5;
        return OffspringLaw::from_probs({0.5, 0.0, 0.5});
    }
    if (spec == "subcritical") {
        if (p) *p = 0.5;
        return OffspringLaw::from_probs({0.6, 0.0, 0.4});
    }
    if (spec.rfind("stable:", 0) == 0) {
        char* end = nullptr;
        const double alpha = std::strtod(spec.c_str() + 7, &end);
        if (end == spec.c_str() + 7 || *end != '\0') throw Error(ErrorKind::Usage, "bad law spec " + spec);
        return build_critical_stable_law(alpha);
    }
    std::ifstream in(spec);
    if (!in) throw Error(ErrorKind::Usage, "cannot read law file " + spec);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Usage, "law file " + spec + ": " + e.what());
    }
    return law_from_json(j, p);
}

std::string config_hash(const nlohmann::json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

std::string output_path(const std::string& path) {
    namespace fs = std::filesystem;
    const char* dir = std::getenv("GWMUT_OUT_DIR");
    if (!dir || !*dir || path == "-" || fs::path(path).is_absolute()) return path;
    return (fs::path(dir) / path).string();
}

void write_sidecar(const std::string& path, const nlohmann::json& config, std::uint64_t seed) {
    nlohmann::json meta;
    meta["config"] = config;
    meta["config_hash"] = config_hash(config);
    meta["seed"] = seed;
    std::ofstream out(path + ".meta.json");
    if (!out) throw Error(ErrorKind::Usage, "cannot write " + path + ".meta.json");
    out << meta.dump(2) << '\n';
}

void write_pair_pmf_csv(std::ostream& os, const PairPmf& pmf) {
    os << "k,l,prob\n";
    for (std::size_t k = 0; k <= pmf.kmax; ++k)
        for (std::size_t l = 0; l <= pmf.lmax; ++l) {
            const double v = pmf.at(k, l);
            if (v != 0.0) os << k << ',' << l << ',' << format_double(v) << '\n';
        }
}

}  // namespace gwmut
