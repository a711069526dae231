#pragma once

// On-disk cache of Lyapunov certificates, stored next to the problem file and
// keyed by (system hash, level, delta). The upper-bound and switching
// commands reuse the certificates the lower-bound run produced instead of
// re-solving, which is the dominant cost.

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "switchmargin/common.hpp"
#include "switchmargin/hierarchy.hpp"
#include "switchmargin/lyapunov.hpp"

namespace switchmargin {

inline uint64_t system_hash(const SwitchedLinearSystem& sys) {
    // FNV-1a over the raw bytes of n and the row-major entries of A, A0.
    uint64_t h = 1469598103934665603ull;
    const auto mix = [&h](const void* data, size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    const int64_t n = sys.n;
    mix(&n, sizeof(n));
    for (int r = 0; r < sys.n; ++r)
        for (int c = 0; c < sys.n; ++c) {
            const double a = sys.a(r, c), a0 = sys.a0(r, c);
            mix(&a, sizeof(a));
            mix(&a0, sizeof(a0));
        }
    return h;
}

struct CachedCertificate {
    uint64_t hash = 0;
    LyapunovCertificate certificate;
};

class CertCache {
  public:
    explicit CertCache(std::string problem_path)
        : path_(std::move(problem_path) + ".certs.json") {
        load();
    }

    const std::string& path() const { return path_; }

    // Best certificate (largest certified delta) for a specific level.
    std::optional<LyapunovCertificate> lookup(uint64_t hash, int level) const {
        std::optional<LyapunovCertificate> best;
        for (const auto& entry : entries_) {
            if (entry.hash != hash || entry.certificate.level != level) continue;
            if (!best || entry.certificate.delta_certified > best->delta_certified)
                best = entry.certificate;
        }
        return best;
    }

    // Best certificate overall: largest delta, higher level breaking ties.
    std::optional<LyapunovCertificate> best(uint64_t hash) const {
        std::optional<LyapunovCertificate> out;
        for (const auto& entry : entries_) {
            if (entry.hash != hash) continue;
            const auto& c = entry.certificate;
            if (!out || c.delta_certified > out->delta_certified + 1e-15 ||
                (std::abs(c.delta_certified - out->delta_certified) <= 1e-15 &&
                 c.level > out->level))
                out = c;
        }
        return out;
    }

    // Insert or replace the per-(hash, level) entry when the new delta is better.
    void store(uint64_t hash, const LyapunovCertificate& cert) {
        for (auto& entry : entries_) {
            if (entry.hash == hash && entry.certificate.level == cert.level) {
                if (cert.delta_certified >= entry.certificate.delta_certified)
                    entry.certificate = cert;
                return;
            }
        }
        entries_.push_back({hash, cert});
    }

    void save() const {
        nlohmann::ordered_json root;
        root["entries"] = nlohmann::ordered_json::array();
        for (const auto& entry : entries_) {
            nlohmann::ordered_json e;
            e["hash"] = entry.hash;
            e["level"] = entry.certificate.level;
            e["delta"] = entry.certificate.delta_certified;
            e["feasibility_margin"] = entry.certificate.feasibility_margin;
            const Mat& p = entry.certificate.p;
            nlohmann::ordered_json rows = nlohmann::ordered_json::array();
            for (Eigen::Index r = 0; r < p.rows(); ++r) {
                nlohmann::ordered_json row = nlohmann::ordered_json::array();
                for (Eigen::Index c = 0; c < p.cols(); ++c) row.push_back(p(r, c));
                rows.push_back(std::move(row));
            }
            e["p"] = std::move(rows);
            root["entries"].push_back(std::move(e));
        }
        std::ofstream out(path_);
        if (!out) throw Error("cannot write certificate cache " + path_);
        out << root.dump(2) << "\n";
    }

  private:
    void load() {
        std::ifstream in(path_);
        if (!in) return;  // empty cache is fine
        nlohmann::json root;
        try {
            in >> root;
            for (const auto& e : root.at("entries")) {
                CachedCertificate entry;
                entry.hash = e.at("hash").get<uint64_t>();
                entry.certificate.level = e.at("level").get<int>();
                entry.certificate.delta_certified = e.at("delta").get<double>();
                entry.certificate.feasibility_margin = e.at("feasibility_margin").get<double>();
                const auto& rows = e.at("p");
                const Eigen::Index dim = static_cast<Eigen::Index>(rows.size());
                entry.certificate.p.resize(dim, dim);
                for (Eigen::Index r = 0; r < dim; ++r)
                    for (Eigen::Index c = 0; c < dim; ++c)
                        entry.certificate.p(r, c) = rows.at(static_cast<size_t>(r))
                                                        .at(static_cast<size_t>(c))
                                                        .get<double>();
                entries_.push_back(std::move(entry));
            }
        } catch (const nlohmann::json::exception&) {
            entries_.clear();  // corrupt cache: start over rather than fail the command
        }
    }

    std::string path_;
    std::vector<CachedCertificate> entries_;
};

}  // namespace switchmargin
