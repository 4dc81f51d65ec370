// Command-line surface for the protected-vector SVM pipeline. Enrollment-side
// commands (keygen, extract, protect, demo-synth) handle raw data and keys;
// server-side commands (train, authenticate, evaluate, attack-sim) only ever
// see protected vectors, mirroring the client/server split of the scheme.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "privsvm/privsvm.hpp"

namespace fs = std::filesystem;
using namespace privsvm;

namespace {

/// Bad flag combinations the parser itself cannot express.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Relative output paths honor PRIVSVM_OUT_DIR when it is set.
fs::path out_path(const std::string& p) {
    const fs::path path(p);
    const char* base = std::getenv("PRIVSVM_OUT_DIR");
    if (base == nullptr || path.is_absolute()) return path;
    return fs::path(base) / path;
}

void ensure_parent(const fs::path& p) {
    const fs::path dir = p.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
}

std::pair<std::size_t, std::size_t> parse_block(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos)
        throw UsageError("--block expects bx,by (e.g. 5,5)");
    const long bx = std::strtol(s.substr(0, comma).c_str(), nullptr, 10);
    const long by = std::strtol(s.substr(comma + 1).c_str(), nullptr, 10);
    if (bx < 1 || by < 1) throw UsageError("--block sides must be >= 1");
    return {static_cast<std::size_t>(bx), static_cast<std::size_t>(by)};
}

std::pair<std::size_t, std::size_t> parse_crop(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos)
        throw UsageError("--crop expects WIDTHxHEIGHT (e.g. 160x190)");
    const long w = std::strtol(s.substr(0, x).c_str(), nullptr, 10);
    const long h = std::strtol(s.substr(x + 1).c_str(), nullptr, 10);
    if (w < 1 || h < 1) throw UsageError("--crop sides must be >= 1");
    return {static_cast<std::size_t>(w), static_cast<std::size_t>(h)};
}

KernelSpec kernel_from_flags(const std::string& kind, std::optional<double> gamma,
                             std::optional<int> degree) {
    if (kind == "linear") {
        if (gamma || degree) throw UsageError("linear kernel takes no --gamma/--degree");
        return KernelSpec::linear();
    }
    if (kind == "rbf") {
        if (!gamma) throw UsageError("rbf kernel requires --gamma");
        if (degree) throw UsageError("rbf kernel takes no --degree");
        return KernelSpec::rbf(*gamma);
    }
    if (kind == "polynomial" || kind == "poly") {
        if (!degree) throw UsageError("polynomial kernel requires --degree");
        if (gamma) throw UsageError("polynomial kernel takes no --gamma");
        return KernelSpec::polynomial(*degree);
    }
    throw UsageError("unknown kernel: " + kind + " (linear|rbf|polynomial)");
}

std::string kernel_echo(const KernelSpec& k) {
    switch (k.kind) {
        case KernelKind::Linear: return "linear";
        case KernelKind::Rbf: return "rbf gamma=" + std::to_string(k.gamma);
        case KernelKind::Polynomial: return "polynomial degree=" + std::to_string(k.degree);
    }
    return "?";
}

std::vector<ProtectedVector> load_protected(const Manifest& m, const std::string& rel,
                                            const std::string& what, int id) {
    if (rel.empty())
        throw ParseError("manifest entry for id " + std::to_string(id) + " lacks a " +
                         what + " file; run `privsvm protect` first");
    const VectorSet vs = load_vectors(m.resolve(rel));
    if (vs.rows.empty())
        throw ParseError(what + " file for id " + std::to_string(id) + " is empty");
    std::vector<ProtectedVector> out;
    out.reserve(vs.rows.size());
    for (const auto& r : vs.rows) out.push_back({r, vs.key_fingerprint});
    return out;
}

void check_fingerprint(const Manifest& m, const ManifestIdentity& ident,
                       const std::string& observed) {
    if (ident.key_path.empty() || observed.empty()) return;
    const SecretKey key = load_key(m.resolve(ident.key_path));
    if (key_fingerprint(key) != observed)
        throw ParseError("id " + std::to_string(ident.id) +
                         ": protected file fingerprint " + observed +
                         " does not match the manifest key " + key_fingerprint(key));
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

int run_keygen(const std::string& scheme, std::size_t dim,
               std::optional<std::uint64_t> seed, const std::string& out) {
    SecretKey key;
    key.scheme = scheme_from_string(scheme);
    if (dim < 1) throw UsageError("--dim must be >= 1");
    key.dim = dim;
    if (seed) {
        key.seed = *seed;
    } else {
        std::random_device rd;
        key.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    const fs::path path = out_path(out);
    ensure_parent(path);
    save_key(key, path);
    std::cout << "seed: " << key.seed << "\n"
              << "fingerprint: " << key_fingerprint(key) << "\n"
              << "wrote " << path.string() << "\n";
    return 0;
}

int run_extract(const std::vector<std::string>& images, const std::string& block,
                const std::string& crop, const std::string& normalize,
                const std::string& out) {
    const auto [bx, by] = parse_block(block);
    std::optional<std::pair<std::size_t, std::size_t>> crop_wh;
    if (!crop.empty()) crop_wh = parse_crop(crop);
    if (normalize != "none" && normalize != "unit")
        throw UsageError("--normalize must be none or unit");

    std::vector<FeatureVector> rows;
    for (const auto& img_path : images) {
        Image img = load_pgm(img_path);
        if (crop_wh) img = center_crop(img, crop_wh->first, crop_wh->second);
        FeatureVector f = downsample(img, bx, by);
        if (normalize == "unit") {
            double norm_sq = 0.0;
            for (double v : f) norm_sq += v * v;
            if (norm_sq > 0.0) {
                const double inv = 1.0 / std::sqrt(norm_sq);
                for (double& v : f) v *= inv;
            }
        }
        if (!rows.empty() && f.size() != rows[0].size())
            throw DimensionMismatch(img_path + ": feature dim " +
                                    std::to_string(f.size()) + " != " +
                                    std::to_string(rows[0].size()));
        rows.push_back(std::move(f));
    }
    const fs::path path = out_path(out);
    ensure_parent(path);
    save_vectors(rows, path);
    std::cout << "extracted " << rows.size() << " vectors of dim " << rows[0].size()
              << " -> " << path.string() << "\n";
    return 0;
}

int run_protect(const std::string& key_file, const std::string& in,
                const std::string& out) {
    const SecretKey key = load_key(key_file);
    const VectorSet vs = load_vectors(in);
    if (vs.rows.empty()) throw ParseError(in + ": no vectors");
    if (vs.rows[0].size() != key.dim)
        throw DimensionMismatch("vectors have dim " + std::to_string(vs.rows[0].size()) +
                                " but the key protects dim " + std::to_string(key.dim));
    const OrthonormalTransform q = generate_transform(key);
    const fs::path path = out_path(out);
    ensure_parent(path);
    save_vectors(protect_all(vs.rows, q), path);
    std::cout << "protected " << vs.rows.size() << " vectors with key "
              << key_fingerprint(key) << " -> " << path.string() << "\n";
    return 0;
}

int run_train(const std::string& manifest_file, const KernelSpec& kernel, double C,
              double tol, std::size_t max_sweeps, const std::string& out) {
    if (!(C > 0)) throw UsageError("--C must be > 0");
    kernel.validate();
    SolverConfig cfg;
    cfg.tol = tol;
    cfg.max_sweeps = max_sweeps;
    std::cout << "kernel: " << kernel_echo(kernel) << " C=" << C << " tol=" << tol
              << " max-sweeps=" << (max_sweeps == 0 ? std::string("auto")
                                                    : std::to_string(max_sweeps))
              << "\n";

    const Manifest m = load_manifest(manifest_file);
    std::vector<std::pair<int, std::vector<ProtectedVector>>> pool;
    std::size_t total = 0;
    for (const auto& ident : m.identities) {
        auto vecs = load_protected(m, ident.train_protected, "protected training", ident.id);
        check_fingerprint(m, ident, vecs[0].key_fingerprint);
        total += vecs.size();
        pool.emplace_back(ident.id, std::move(vecs));
    }
    const ClassifierBank bank = train_bank(pool, kernel, C, cfg);
    const fs::path path = out_path(out);
    ensure_parent(path);
    save_bank(bank, path);
    std::cout << "trained " << bank.entries.size() << " one-vs-rest models on " << total
              << " pooled samples (dim " << bank.dim << ") -> " << path.string() << "\n";
    return 0;
}

int run_authenticate(const std::string& bank_file, int id, const std::string& query_file,
                     double tau) {
    const ClassifierBank bank = load_bank(bank_file);
    const VectorSet vs = load_vectors(query_file);
    if (vs.rows.empty()) throw ParseError(query_file + ": no query vectors");
    const BankEntry& entry = bank.find(id);
    if (!vs.key_fingerprint.empty() && !entry.key_fingerprint.empty() &&
        vs.key_fingerprint != entry.key_fingerprint)
        std::cerr << "warning: query fingerprint " << vs.key_fingerprint
                  << " differs from the enrollment key " << entry.key_fingerprint << "\n";
    for (std::size_t r = 0; r < vs.rows.size(); ++r) {
        const AuthResult res =
            authenticate(bank, id, ProtectedVector{vs.rows[r], vs.key_fingerprint}, tau);
        std::cout << "query " << r << ": " << (res.accepted ? "accept" : "reject")
                  << " score=" << detail::fmt_double(res.decision.score) << "\n";
    }
    return 0;
}

int run_evaluate(const std::string& bank_file, const std::string& manifest_file,
                 const std::string& out) {
    const ClassifierBank bank = load_bank(bank_file);
    const Manifest m = load_manifest(manifest_file);
    std::map<int, std::vector<FeatureVector>> queries;
    for (const auto& ident : m.identities) {
        auto vecs = load_protected(m, ident.query_protected, "protected query", ident.id);
        check_fingerprint(m, ident, vecs[0].key_fingerprint);
        auto& dst = queries[ident.id];
        for (auto& v : vecs) dst.push_back(std::move(v.values));
    }
    const EvaluationReport rep = evaluate(bank, queries);
    const fs::path base = out_path(out);
    ensure_parent(base);
    save_report(rep, base);
    std::cout << "eer: " << detail::fmt_double(rep.eer) << " at tau "
              << detail::fmt_double(rep.eer_threshold) << " (interp "
              << detail::fmt_double(rep.eer_interp) << ")\n"
              << "wrote " << base.string() << ".csv and .json\n";
    return 0;
}

int run_attack_sim(const std::string& bank_file, const std::string& manifest_file,
                   const std::string& mode, int leaked_id, const std::string& out) {
    if (mode != "key-leak" && mode != "image-leak")
        throw UsageError("--mode must be key-leak or image-leak");
    const ClassifierBank bank = load_bank(bank_file);
    const Manifest m = load_manifest(manifest_file);
    if (!m.attacker)
        throw ParseError(manifest_file + ": manifest has no attacker entry");

    AttackScenario sc;
    if (mode == "key-leak") {
        sc.kind = AttackScenario::Kind::KeyLeak;
        const ManifestIdentity* owner = nullptr;
        for (const auto& ident : m.identities)
            if (leaked_id == 0 ? owner == nullptr : ident.id == leaked_id)
                owner = &ident;
        if (owner == nullptr)
            throw ParseError("no manifest identity with id " + std::to_string(leaked_id));
        if (owner->key_path.empty())
            throw ParseError("id " + std::to_string(owner->id) +
                             " has no key in the manifest; key-leak needs it");
        sc.leaked_key = load_key(m.resolve(owner->key_path));
        const VectorSet vs = load_vectors(m.resolve(m.attacker->query_raw));
        sc.attacker_raw = vs.rows;
    } else {
        sc.kind = AttackScenario::Kind::ImageLeak;
        sc.attacker_key = load_key(m.resolve(m.attacker->key_path));
        for (const auto& ident : m.identities) {
            if (ident.query_raw.empty())
                throw ParseError("id " + std::to_string(ident.id) +
                                 " has no raw query file; image-leak needs raw images");
            sc.leaked_images[ident.id] = load_vectors(m.resolve(ident.query_raw)).rows;
        }
    }
    const EvaluationReport rep = simulate_attack(bank, sc);
    const fs::path base = out_path(out);
    ensure_parent(base);
    save_report(rep, base);
    std::cout << "simulated " << mode << " against " << rep.ids.size() << " victims ("
              << rep.impostor_counts[0] << " queries each)\n"
              << "wrote " << base.string() << ".csv and .json\n";
    return 0;
}

int run_demo_synth(std::size_t identities, std::size_t per_id, std::size_t per_id_query,
                   std::size_t dim, double separation, double common_offset,
                   double noise_sigma, int key_condition, std::uint64_t seed,
                   const std::string& scheme, const std::string& out_dir) {
    if (key_condition != 1 && key_condition != 2)
        throw UsageError("--key-condition must be 1 or 2");
    SynthConfig cfg;
    cfg.identities = identities;
    cfg.per_id_train = per_id;
    cfg.per_id_query = per_id_query == 0 ? per_id : per_id_query;
    cfg.dim = dim;
    cfg.separation = separation;
    cfg.common_norm = common_offset;
    cfg.noise_sigma = noise_sigma;
    cfg.seed = seed;
    const Scheme sch = scheme_from_string(scheme);

    const SynthDataset ds = make_synth_dataset(cfg);
    const fs::path root = out_path(out_dir);
    fs::create_directories(root / "keys");
    fs::create_directories(root / "raw");
    fs::create_directories(root / "protected");

    Manifest m;
    m.dim = cfg.dim;
    m.key_condition = key_condition;
    for (const auto& ident : ds.identities) {
        const std::string tag =
            (ident.id < 10 ? "id_00" : ident.id < 100 ? "id_0" : "id_") +
            std::to_string(ident.id);
        const SecretKey key = synth_identity_key(cfg, sch, key_condition, ident.id);
        const OrthonormalTransform q = generate_transform(key);

        ManifestIdentity entry;
        entry.id = ident.id;
        entry.key_path = "keys/" + tag + ".json";
        entry.train_raw = "raw/" + tag + "_train.csv";
        entry.query_raw = "raw/" + tag + "_query.csv";
        entry.train_protected = "protected/" + tag + "_train.csv";
        entry.query_protected = "protected/" + tag + "_query.csv";

        save_key(key, root / entry.key_path);
        save_vectors(ident.train, root / entry.train_raw);
        save_vectors(ident.query, root / entry.query_raw);
        save_vectors(protect_all(ident.train, q), root / entry.train_protected);
        save_vectors(protect_all(ident.query, q), root / entry.query_protected);
        m.identities.push_back(std::move(entry));
    }

    const SecretKey attacker_key = synth_attacker_key(cfg, sch);
    ManifestAttacker attacker;
    attacker.key_path = "keys/attacker.json";
    attacker.query_raw = "raw/attacker_query.csv";
    save_key(attacker_key, root / attacker.key_path);
    save_vectors(ds.attacker_query, root / attacker.query_raw);
    m.attacker = std::move(attacker);

    save_manifest(m, root / "manifest.json");
    std::cout << "identities: " << identities << " (+1 attacker), train/query per id: "
              << cfg.per_id_train << "/" << cfg.per_id_query << ", dim: " << dim
              << ", key condition: " << key_condition << ", scheme: " << scheme << "\n"
              << "wrote " << (root / "manifest.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature-vector protection with seeded orthonormal transforms and SVM "
                 "authentication on the protected vectors"};
    app.require_subcommand(1);

    // keygen
    auto* keygen = app.add_subcommand("keygen", "Generate a secret key file");
    std::string kg_scheme = "permutation";
    std::size_t kg_dim = 0;
    std::optional<std::uint64_t> kg_seed;
    std::string kg_out;
    keygen->add_option("--scheme", kg_scheme,
                       "permutation|signed-permutation|gram-schmidt")
        ->capture_default_str();
    keygen->add_option("--dim", kg_dim, "Feature dimension d")->required();
    keygen->add_option("--seed", kg_seed, "64-bit seed; drawn from OS entropy if absent");
    keygen->add_option("--out", kg_out, "Key file to write")->required();

    // extract
    auto* extract = app.add_subcommand("extract", "Block-mean features from PGM images");
    std::vector<std::string> ex_images;
    std::string ex_block = "5,5", ex_crop, ex_norm = "none", ex_out;
    extract->add_option("--images", ex_images, "P5 PGM files, one vector per image")
        ->required()
        ->expected(-1);
    extract->add_option("--block", ex_block, "Block size bx,by")->capture_default_str();
    extract->add_option("--crop", ex_crop,
                        "Center-crop WIDTHxHEIGHT before tiling (e.g. 160x190 for the "
                        "1216-dim face layout)");
    extract->add_option("--normalize", ex_norm, "none|unit (unit = L2-normalize rows)")
        ->capture_default_str();
    extract->add_option("--out", ex_out, "Output CSV")->required();

    // protect
    auto* protect_cmd = app.add_subcommand("protect", "Apply a key's transform to vectors");
    std::string pr_key, pr_in, pr_out;
    protect_cmd->add_option("--key", pr_key, "Key file")->required();
    protect_cmd->add_option("--in", pr_in, "Raw vector CSV")->required();
    protect_cmd->add_option("--out", pr_out, "Protected vector CSV")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the one-vs-rest bank from a manifest");
    std::string tr_manifest, tr_kernel = "linear", tr_out;
    std::optional<double> tr_gamma;
    std::optional<int> tr_degree;
    double tr_c = 1.0, tr_tol = 1e-3;
    std::size_t tr_sweeps = 0;
    train_cmd->add_option("--manifest", tr_manifest, "Dataset manifest")->required();
    train_cmd->add_option("--kernel", tr_kernel, "linear|rbf|polynomial")
        ->capture_default_str();
    train_cmd->add_option("--gamma", tr_gamma, "RBF gamma");
    train_cmd->add_option("--degree", tr_degree, "Polynomial degree");
    train_cmd->add_option("--C", tr_c, "Soft-margin C")->capture_default_str();
    train_cmd->add_option("--tol", tr_tol, "Solver KKT tolerance")->capture_default_str();
    train_cmd->add_option("--max-sweeps", tr_sweeps, "Update budget / n; 0 = 10n")
        ->capture_default_str();
    train_cmd->add_option("--out", tr_out, "Bank file to write")->required();

    // authenticate
    auto* auth = app.add_subcommand("authenticate", "Score queries against a claimed id");
    std::string au_bank, au_query;
    int au_id = 0;
    double au_tau = 0.0;
    auth->add_option("--bank", au_bank, "Bank file")->required();
    auth->add_option("--id", au_id, "Claimed identity")->required();
    auth->add_option("--query", au_query, "Protected query CSV")->required();
    auth->add_option("--tau", au_tau, "Acceptance threshold (accept iff score >= tau)")
        ->required();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "FAR/FRR/EER over the manifest's query split");
    std::string ev_bank, ev_manifest, ev_out;
    eval->add_option("--bank", ev_bank, "Bank file")->required();
    eval->add_option("--manifest", ev_manifest, "Dataset manifest")->required();
    eval->add_option("--out", ev_out, "Report base path (writes .csv and .json)")
        ->required();

    // attack-sim
    auto* attack = app.add_subcommand("attack-sim", "Key-leak / image-leak spoofing FAR");
    std::string at_bank, at_manifest, at_mode, at_out;
    int at_leaked = 0;
    attack->add_option("--bank", at_bank, "Bank file")->required();
    attack->add_option("--manifest", at_manifest, "Dataset manifest")->required();
    attack->add_option("--mode", at_mode, "key-leak|image-leak")->required();
    attack->add_option("--leaked-id", at_leaked,
                       "Whose key leaks (key-leak mode); 0 = first identity")
        ->capture_default_str();
    attack->add_option("--out", at_out, "Report base path (writes .csv and .json)")
        ->required();

    // demo-synth
    auto* demo = app.add_subcommand("demo-synth", "Write a synthetic-identity dataset");
    std::size_t dm_ids = 8, dm_per_id = 16, dm_per_id_query = 0, dm_dim = 64;
    double dm_sep = 6.0, dm_offset = 0.0, dm_sigma = 1.0;
    int dm_cond = 1;
    std::uint64_t dm_seed = 1;
    std::string dm_scheme = "permutation", dm_out;
    demo->add_option("--identities", dm_ids, "Enrollee count")->capture_default_str();
    demo->add_option("--per-id", dm_per_id, "Training samples per identity")
        ->capture_default_str();
    demo->add_option("--per-id-query", dm_per_id_query,
                     "Query samples per identity; 0 = same as --per-id")
        ->capture_default_str();
    demo->add_option("--dim", dm_dim, "Feature dimension")->capture_default_str();
    demo->add_option("--separation", dm_sep, "Mean spacing in sigma units")
        ->capture_default_str();
    demo->add_option("--common-offset", dm_offset,
                     "Norm of the shared cluster offset, in sigma units")
        ->capture_default_str();
    demo->add_option("--noise-sigma", dm_sigma, "Per-coordinate sample noise")
        ->capture_default_str();
    demo->add_option("--key-condition", dm_cond, "1 = shared key, 2 = per-identity keys")
        ->capture_default_str();
    demo->add_option("--seed", dm_seed, "Dataset seed")->capture_default_str();
    demo->add_option("--scheme", dm_scheme, "Transform scheme for the keys")
        ->capture_default_str();
    demo->add_option("--out-dir", dm_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (keygen->parsed())
            return run_keygen(kg_scheme, kg_dim, kg_seed, kg_out);
        if (extract->parsed())
            return run_extract(ex_images, ex_block, ex_crop, ex_norm, ex_out);
        if (protect_cmd->parsed()) return run_protect(pr_key, pr_in, pr_out);
        if (train_cmd->parsed())
            return run_train(tr_manifest, kernel_from_flags(tr_kernel, tr_gamma, tr_degree),
                             tr_c, tr_tol, tr_sweeps, tr_out);
        if (auth->parsed()) return run_authenticate(au_bank, au_id, au_query, au_tau);
        if (eval->parsed()) return run_evaluate(ev_bank, ev_manifest, ev_out);
        if (attack->parsed())
            return run_attack_sim(at_bank, at_manifest, at_mode, at_leaked, at_out);
        if (demo->parsed())
            return run_demo_synth(dm_ids, dm_per_id, dm_per_id_query, dm_dim, dm_sep,
                                  dm_offset, dm_sigma, dm_cond, dm_seed, dm_scheme, dm_out);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const NonConvergence& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const DegenerateMatrix& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
