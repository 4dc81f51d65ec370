#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "privsvm/biometric.hpp"
#include "privsvm/errors.hpp"
#include "privsvm/kernels.hpp"
#include "privsvm/svm.hpp"
#include "privsvm/transform.hpp"

namespace privsvm {

inline constexpr int kFormatVersion = 1;

namespace detail {

using json = nlohmann::json;

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError("corrupt JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

/// Envelope check shared by every JSON artifact: wrong version and wrong kind
/// are hard errors, never best-effort parses.
inline void check_envelope(const json& j, const std::string& kind, const std::string& where) {
    if (!j.is_object() || !j.contains("version") || !j.contains("kind"))
        throw ParseError(where + ": missing envelope fields");
    if (!j["version"].is_number_integer() ||
        j["version"].get<int>() != kFormatVersion)
        throw VersionMismatch(where + ": unsupported format version " + j["version"].dump());
    if (j["kind"].get<std::string>() != kind)
        throw KindMismatch(where + ": expected kind \"" + kind + "\", found " +
                           j["kind"].dump());
}

template <typename T>
T get_field(const json& j, const char* name, const std::string& where) {
    if (!j.contains(name)) throw ParseError(where + ": missing field \"" + name + "\"");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(where + ": bad field \"" + name + "\": " + e.what());
    }
}

/// %.17g round-trips every finite double exactly and prints inf/nan tokens
/// strtod understands.
inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& tok, const std::string& where) {
    const char* s = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw ParseError(where + ": not a number: \"" + tok + "\"");
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// keys
// ---------------------------------------------------------------------------

inline void save_key(const SecretKey& key, const std::filesystem::path& path) {
    detail::json j;
    j["version"] = kFormatVersion;
    j["kind"] = "key";
    j["scheme"] = scheme_to_string(key.scheme);
    j["seed"] = key.seed;
    j["dim"] = key.dim;
    j["prng"] = kPrngName;
    detail::write_json_file(path, j);
}

inline SecretKey load_key(const std::filesystem::path& path) {
    const auto j = detail::read_json_file(path);
    detail::check_envelope(j, "key", path.string());
    SecretKey key;
    key.scheme = scheme_from_string(
        detail::get_field<std::string>(j, "scheme", path.string()));
    key.seed = detail::get_field<std::uint64_t>(j, "seed", path.string());
    const auto dim = detail::get_field<std::int64_t>(j, "dim", path.string());
    if (dim < 1) throw ParseError(path.string() + ": dim must be >= 1");
    key.dim = static_cast<std::size_t>(dim);
    const auto prng = detail::get_field<std::string>(j, "prng", path.string());
    if (prng != kPrngName)
        throw VersionMismatch(path.string() + ": key was made with generator \"" + prng +
                              "\", this build provides \"" + kPrngName + "\"");
    return key;
}

// ---------------------------------------------------------------------------
// vector sets (CSV, one vector per row)
// ---------------------------------------------------------------------------

struct VectorSet {
    std::vector<FeatureVector> rows;
    std::string key_fingerprint;  // empty for raw vectors
};

inline void save_vectors(const std::vector<FeatureVector>& rows,
                         const std::filesystem::path& path,
                         const std::string& fingerprint = {}) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    if (!fingerprint.empty()) out << "# key_fingerprint: " << fingerprint << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out << ',';
            out << detail::fmt_double(r[i]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline void save_vectors(const std::vector<ProtectedVector>& rows,
                         const std::filesystem::path& path) {
    std::vector<FeatureVector> plain;
    plain.reserve(rows.size());
    std::string fp;
    for (const auto& r : rows) {
        if (fp.empty())
            fp = r.key_fingerprint;
        else if (!r.key_fingerprint.empty() && r.key_fingerprint != fp)
            throw InvalidArgument("save_vectors: mixed key fingerprints in one set");
        plain.push_back(r.values);
    }
    save_vectors(plain, path, fp);
}

inline VectorSet load_vectors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    VectorSet vs;
    std::string line;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string tag = "# key_fingerprint: ";
            if (line.rfind(tag, 0) == 0) vs.key_fingerprint = line.substr(tag.size());
            continue;
        }
        FeatureVector row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ','))
            row.push_back(detail::parse_double(tok, path.string()));
        if (row.empty()) throw ParseError(path.string() + ": empty row");
        if (width == 0)
            width = row.size();
        else if (row.size() != width)
            throw ParseError(path.string() + ": row width " + std::to_string(row.size()) +
                             " != " + std::to_string(width) +
                             " (truncated or corrupt file)");
        vs.rows.push_back(std::move(row));
    }
    return vs;
}

// ---------------------------------------------------------------------------
// dataset manifest
// ---------------------------------------------------------------------------

struct ManifestIdentity {
    int id = 0;
    std::string key_path;
    std::string train_raw, query_raw;
    std::string train_protected, query_protected;
};

struct ManifestAttacker {
    std::string key_path;
    std::string query_raw;
};

/// Identities, file paths (relative to the manifest's directory), split and
/// key assignments for one experiment.
struct Manifest {
    std::size_t dim = 0;
    int key_condition = 0;  // 1 or 2; informational
    std::vector<ManifestIdentity> identities;
    std::optional<ManifestAttacker> attacker;
    std::filesystem::path base_dir;  // set on load; not serialized

    std::filesystem::path resolve(const std::string& rel) const {
        const std::filesystem::path p(rel);
        return p.is_absolute() ? p : base_dir / p;
    }
};

inline void save_manifest(const Manifest& m, const std::filesystem::path& path) {
    detail::json j;
    j["version"] = kFormatVersion;
    j["kind"] = "manifest";
    j["dim"] = m.dim;
    j["key_condition"] = m.key_condition;
    j["identities"] = detail::json::array();
    for (const auto& ident : m.identities) {
        detail::json e;
        e["id"] = ident.id;
        e["key"] = ident.key_path;
        e["train_raw"] = ident.train_raw;
        e["query_raw"] = ident.query_raw;
        e["train_protected"] = ident.train_protected;
        e["query_protected"] = ident.query_protected;
        j["identities"].push_back(e);
    }
    if (m.attacker) {
        j["attacker"]["key"] = m.attacker->key_path;
        j["attacker"]["query_raw"] = m.attacker->query_raw;
    }
    detail::write_json_file(path, j);
}

inline Manifest load_manifest(const std::filesystem::path& path) {
    const auto j = detail::read_json_file(path);
    detail::check_envelope(j, "manifest", path.string());
    Manifest m;
    m.base_dir = std::filesystem::absolute(path).parent_path();
    const auto dim = detail::get_field<std::int64_t>(j, "dim", path.string());
    if (dim < 1) throw ParseError(path.string() + ": dim must be >= 1");
    m.dim = static_cast<std::size_t>(dim);
    m.key_condition = detail::get_field<int>(j, "key_condition", path.string());
    if (!j.contains("identities") || !j["identities"].is_array() || j["identities"].empty())
        throw ParseError(path.string() + ": manifest lists no identities");
    for (const auto& e : j["identities"]) {
        ManifestIdentity ident;
        ident.id = detail::get_field<int>(e, "id", path.string());
        ident.key_path = detail::get_field<std::string>(e, "key", path.string());
        ident.train_raw = detail::get_field<std::string>(e, "train_raw", path.string());
        ident.query_raw = detail::get_field<std::string>(e, "query_raw", path.string());
        ident.train_protected =
            detail::get_field<std::string>(e, "train_protected", path.string());
        ident.query_protected =
            detail::get_field<std::string>(e, "query_protected", path.string());
        m.identities.push_back(std::move(ident));
    }
    if (j.contains("attacker")) {
        ManifestAttacker a;
        a.key_path = detail::get_field<std::string>(j["attacker"], "key", path.string());
        a.query_raw =
            detail::get_field<std::string>(j["attacker"], "query_raw", path.string());
        m.attacker = std::move(a);
    }
    return m;
}

// ---------------------------------------------------------------------------
// models and banks
// ---------------------------------------------------------------------------

namespace detail {

inline json kernel_to_json(const KernelSpec& k) {
    json j;
    j["kind"] = kernel_kind_to_string(k.kind);
    if (k.kind == KernelKind::Rbf) j["gamma"] = k.gamma;
    if (k.kind == KernelKind::Polynomial) j["degree"] = k.degree;
    return j;
}

inline KernelSpec kernel_from_json(const json& j, const std::string& where) {
    KernelSpec k;
    k.kind = kernel_kind_from_string(get_field<std::string>(j, "kind", where));
    if (k.kind == KernelKind::Rbf) {
        k.gamma = get_field<double>(j, "gamma", where);
        if (j.contains("degree")) throw ParseError(where + ": rbf kernel carries a degree");
    } else if (k.kind == KernelKind::Polynomial) {
        k.degree = get_field<int>(j, "degree", where);
        if (j.contains("gamma"))
            throw ParseError(where + ": polynomial kernel carries a gamma");
    } else {
        if (j.contains("gamma") || j.contains("degree"))
            throw ParseError(where + ": linear kernel carries parameters");
    }
    k.validate();
    return k;
}

inline json model_to_json(const SvmModel& m) {
    json j;
    j["kernel"] = kernel_to_json(m.kernel);
    j["C"] = m.C;
    j["bias"] = m.bias;
    j["dual_objective"] = m.dual_objective;
    j["dual_coefs"] = m.dual_coefs;
    j["sv_indices"] = m.sv_indices;
    j["support_vectors"] = m.support_vectors;
    j["solver"]["tol"] = m.config.tol;
    j["solver"]["max_sweeps"] = m.config.max_sweeps;
    return j;
}

inline SvmModel model_from_json(const json& j, const std::string& where) {
    SvmModel m;
    m.kernel = kernel_from_json(j.contains("kernel") ? j["kernel"] : json{}, where);
    m.C = get_field<double>(j, "C", where);
    m.bias = get_field<double>(j, "bias", where);
    m.dual_objective = get_field<double>(j, "dual_objective", where);
    m.dual_coefs = get_field<std::vector<double>>(j, "dual_coefs", where);
    m.sv_indices = get_field<std::vector<std::size_t>>(j, "sv_indices", where);
    m.support_vectors = get_field<std::vector<FeatureVector>>(j, "support_vectors", where);
    if (m.support_vectors.size() != m.dual_coefs.size() ||
        m.support_vectors.size() != m.sv_indices.size())
        throw ParseError(where + ": support vector arrays disagree in length");
    if (!j.contains("solver")) throw ParseError(where + ": missing solver echo");
    m.config.tol = get_field<double>(j["solver"], "tol", where);
    m.config.max_sweeps = get_field<std::size_t>(j["solver"], "max_sweeps", where);
    return m;
}

}  // namespace detail

inline void save_model(const SvmModel& m, const std::filesystem::path& path) {
    detail::json j = detail::model_to_json(m);
    j["version"] = kFormatVersion;
    j["kind"] = "model";
    detail::write_json_file(path, j);
}

inline SvmModel load_model(const std::filesystem::path& path) {
    const auto j = detail::read_json_file(path);
    detail::check_envelope(j, "model", path.string());
    return detail::model_from_json(j, path.string());
}

inline void save_bank(const ClassifierBank& bank, const std::filesystem::path& path) {
    detail::json j;
    j["version"] = kFormatVersion;
    j["kind"] = "bank";
    j["kernel"] = detail::kernel_to_json(bank.kernel);
    j["C"] = bank.C;
    j["dim"] = bank.dim;
    j["entries"] = detail::json::array();
    for (const auto& e : bank.entries) {
        detail::json je;
        je["id"] = e.id;
        je["key_fingerprint"] = e.key_fingerprint;
        je["model"] = detail::model_to_json(e.model);
        j["entries"].push_back(je);
    }
    detail::write_json_file(path, j);
}

inline ClassifierBank load_bank(const std::filesystem::path& path) {
    const auto j = detail::read_json_file(path);
    detail::check_envelope(j, "bank", path.string());
    ClassifierBank bank;
    bank.kernel = detail::kernel_from_json(
        j.contains("kernel") ? j["kernel"] : detail::json{}, path.string());
    bank.C = detail::get_field<double>(j, "C", path.string());
    bank.dim = detail::get_field<std::size_t>(j, "dim", path.string());
    if (!j.contains("entries") || !j["entries"].is_array() || j["entries"].empty())
        throw ParseError(path.string() + ": bank has no entries");
    for (const auto& je : j["entries"]) {
        BankEntry e;
        e.id = detail::get_field<int>(je, "id", path.string());
        e.key_fingerprint =
            detail::get_field<std::string>(je, "key_fingerprint", path.string());
        if (!je.contains("model")) throw ParseError(path.string() + ": entry lacks model");
        e.model = detail::model_from_json(je["model"], path.string());
        bank.entries.push_back(std::move(e));
    }
    return bank;
}

// ---------------------------------------------------------------------------
// reports (CSV curve + JSON summary)
// ---------------------------------------------------------------------------

/// Reports live as a pair of files: <base>.csv with the tau,far,frr curve and
/// <base>.json with the summary. Doubles go through %.17g / shortest-exact
/// JSON numbers, so a load reproduces the saved report bit for bit.
inline void save_report(const EvaluationReport& r, const std::filesystem::path& base) {
    const std::filesystem::path csv_path = base.string() + ".csv";
    const std::filesystem::path json_path = base.string() + ".json";

    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot open " + csv_path.string() + " for writing");
    csv << "tau,far,frr\n";
    for (std::size_t k = 0; k < r.thresholds.size(); ++k)
        csv << detail::fmt_double(r.thresholds[k]) << ',' << detail::fmt_double(r.far[k])
            << ',' << detail::fmt_double(r.frr[k]) << '\n';
    if (!csv) throw IoError("write failed: " + csv_path.string());

    detail::json j;
    j["version"] = kFormatVersion;
    j["kind"] = "report";
    j["report_kind"] = report_kind_to_string(r.kind);
    j["ids"] = r.ids;
    j["genuine_counts"] = r.genuine_counts;
    j["impostor_counts"] = r.impostor_counts;
    if (r.has_eer) {
        j["eer"] = r.eer;
        j["eer_threshold"] = r.eer_threshold;
        j["eer_interp"] = r.eer_interp;
        j["eer_threshold_interp"] = r.eer_threshold_interp;
    }
    detail::write_json_file(json_path, j);
}

inline EvaluationReport load_report(const std::filesystem::path& base) {
    const std::filesystem::path csv_path = base.string() + ".csv";
    const std::filesystem::path json_path = base.string() + ".json";

    const auto j = detail::read_json_file(json_path);
    detail::check_envelope(j, "report", json_path.string());
    EvaluationReport r;
    r.kind = report_kind_from_string(
        detail::get_field<std::string>(j, "report_kind", json_path.string()));
    r.ids = detail::get_field<std::vector<int>>(j, "ids", json_path.string());
    r.genuine_counts =
        detail::get_field<std::vector<std::size_t>>(j, "genuine_counts", json_path.string());
    r.impostor_counts = detail::get_field<std::vector<std::size_t>>(j, "impostor_counts",
                                                                    json_path.string());
    if (j.contains("eer")) {
        r.has_eer = true;
        r.eer = detail::get_field<double>(j, "eer", json_path.string());
        r.eer_threshold = detail::get_field<double>(j, "eer_threshold", json_path.string());
        r.eer_interp = detail::get_field<double>(j, "eer_interp", json_path.string());
        r.eer_threshold_interp =
            detail::get_field<double>(j, "eer_threshold_interp", json_path.string());
    }

    std::ifstream csv(csv_path);
    if (!csv) throw IoError("cannot open " + csv_path.string());
    std::string line;
    if (!std::getline(csv, line) || (line != "tau,far,frr" && line != "tau,far,frr\r"))
        throw ParseError(csv_path.string() + ": missing tau,far,frr header");
    while (std::getline(csv, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> cells;
        while (std::getline(ss, tok, ','))
            cells.push_back(detail::parse_double(tok, csv_path.string()));
        if (cells.size() != 3)
            throw ParseError(csv_path.string() + ": expected 3 columns, found " +
                             std::to_string(cells.size()));
        r.thresholds.push_back(cells[0]);
        r.far.push_back(cells[1]);
        r.frr.push_back(cells[2]);
    }
    if (r.thresholds.empty()) throw ParseError(csv_path.string() + ": no curve rows");
    return r;
}

// ---------------------------------------------------------------------------
// PGM images (P5, 8-bit)
// ---------------------------------------------------------------------------

inline Image load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    auto next_token = [&]() -> std::string {
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {}
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        if (tok.empty()) throw ParseError(path.string() + ": truncated PGM header");
        return tok;
    };

    if (next_token() != "P5")
        throw ParseError(path.string() + ": not a binary PGM (P5) file");
    const long w = std::strtol(next_token().c_str(), nullptr, 10);
    const long h = std::strtol(next_token().c_str(), nullptr, 10);
    const long maxval = std::strtol(next_token().c_str(), nullptr, 10);
    if (w < 1 || h < 1) throw ParseError(path.string() + ": bad PGM dimensions");
    if (maxval < 1 || maxval > 255)
        throw ParseError(path.string() + ": only 8-bit PGM supported (maxval " +
                         std::to_string(maxval) + ")");

    Image img;
    img.width = static_cast<std::size_t>(w);
    img.height = static_cast<std::size_t>(h);
    std::vector<unsigned char> buf(img.width * img.height);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size())
        throw ParseError(path.string() + ": truncated PGM pixel data");
    img.pixels.assign(buf.begin(), buf.end());
    return img;
}

inline void save_pgm(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    for (double p : img.pixels) {
        const double clamped = std::min(255.0, std::max(0.0, p));
        out.put(static_cast<char>(static_cast<unsigned char>(clamped + 0.5)));
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace privsvm
