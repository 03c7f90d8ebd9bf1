// Artifact output: CSV and JSON writers with a config checksum embedded in
// every file, plus the run manifest. Doubles are printed with %.17g so that
// identical runs produce byte-identical files.
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace torusdyn {

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string checksum_hex(const std::string& data) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(std::string checksum, const std::vector<std::string>& header)
        : checksum_(std::move(checksum)) {
        body_ << "# config_checksum=" << checksum_ << "\n";
        for (std::size_t i = 0; i < header.size(); ++i)
            body_ << header[i] << (i + 1 < header.size() ? "," : "");
        body_ << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            body_ << cells[i] << (i + 1 < cells.size() ? "," : "");
        body_ << "\n";
    }

    std::string str() const { return body_.str(); }

private:
    std::string checksum_;
    std::ostringstream body_;
};

// Accumulates output files in memory, then writes them and the manifest in
// one pass. The manifest records per-file checksums and the wall time; the
// data files themselves depend only on config + seed.
class ArtifactWriter {
public:
    ArtifactWriter(std::string out_dir, std::string config_echo)
        : dir_(std::move(out_dir)), config_echo_(std::move(config_echo)),
          checksum_(checksum_hex(config_echo_)) {}

    const std::string& checksum() const { return checksum_; }

    void add_csv(const std::string& name, const CsvWriter& csv) { files_[name] = csv.str(); }

    void add_json(const std::string& name, nlohmann::ordered_json j) {
        nlohmann::json sorted = nlohmann::json::parse(j.dump()); // re-parse sorts keys
        sorted["config_checksum"] = checksum_;
        files_[name] = sorted.dump(2) + "\n";
    }

    void write_all(double wall_time_s, const std::string& tool_version) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir_);
        nlohmann::json manifest;
        manifest["tool_version"] = tool_version;
        manifest["config_checksum"] = checksum_;
        manifest["config_echo"] = config_echo_;
        manifest["wall_time_s"] = wall_time_s;
        nlohmann::json outs = nlohmann::json::object();
        for (const auto& [name, data] : files_) {
            std::ofstream f(fs::path(dir_) / name, std::ios::binary);
            if (!f) throw std::runtime_error("cannot write output file " + name);
            f << data;
            outs[name] = checksum_hex(data);
        }
        manifest["outputs"] = outs;
        std::ofstream mf(fs::path(dir_) / "manifest.json", std::ios::binary);
        mf << manifest.dump(2) << "\n";
    }

private:
    std::string dir_;
    std::string config_echo_;
    std::string checksum_;
    std::map<std::string, std::string> files_;
};

} // namespace torusdyn
