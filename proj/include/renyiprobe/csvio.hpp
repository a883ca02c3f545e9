#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "renyiprobe/version.hpp"

namespace renyiprobe {

/// CSV table with a fixed, declared column order. Numeric cells are
/// formatted with 12 significant digits so re-runs are byte-identical.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
        for (std::size_t i = 0; i < columns_.size(); ++i)
            body_ += (i ? "," : "") + columns_[i];
        body_ += "\n";
    }

    class Row {
    public:
        explicit Row(CsvTable& t) : t_(t) {}
        Row& cell(const std::string& s) {
            if (n_) t_.body_ += ",";
            t_.body_ += s;
            ++n_;
            return *this;
        }
        Row& cell(double x) {
            std::ostringstream os;
            os.precision(12);
            os << x;
            return cell(os.str());
        }
        Row& cell(int x) { return cell(std::to_string(x)); }
        Row& cell(long long x) { return cell(std::to_string(x)); }
        ~Row() {
            if (n_ != t_.columns_.size()) t_.column_mismatch_ = true;
            t_.body_ += "\n";
        }

    private:
        CsvTable& t_;
        std::size_t n_ = 0;
    };

    Row row() { return Row(*this); }

    const std::string& text() const {
        if (column_mismatch_) throw std::logic_error("CsvTable: row width differs from header");
        return body_;
    }

private:
    friend class Row;
    std::vector<std::string> columns_;
    std::string body_;
    bool column_mismatch_ = false;
};

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

/// Emitted for every run: resolved config, seed, code version, wall clock
/// and a checksum per output file.
struct RunManifest {
    std::string experiment;
    std::uint64_t seed = 0;
    double wall_seconds = 0;
    std::string resolved_config;
    std::vector<std::pair<std::string, std::uint64_t>> checksums;

    std::string text() const {
        std::ostringstream os;
        os << version_string << "\n";
        os << "experiment = " << experiment << "\n";
        os << "seed = " << seed << "\n";
        os.precision(3);
        os << std::fixed << "wall_clock_seconds = " << wall_seconds << "\n";
        os << "\n[resolved-config]\n" << resolved_config;
        os << "\n[checksums]\n";
        for (const auto& [name, sum] : checksums) {
            os << name << " = 0x" << std::hex << sum << std::dec << "\n";
        }
        return os.str();
    }
};

} // namespace renyiprobe
