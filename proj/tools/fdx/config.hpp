#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdx/model.hpp"

namespace fdx::cli {

/// Typed view of one JSON object. Every key read is recorded; finish() rejects
/// the rest, so a typo fails loudly instead of silently using a default.
class Section {
public:
    Section(const nlohmann::json& j, std::string path);

    bool has(const std::string& key) const;
    double num(const std::string& key, double def);
    double num(const std::string& key);
    long long integer(const std::string& key, long long def);
    bool flag(const std::string& key, bool def);
    std::string str(const std::string& key, const std::string& def);
    std::vector<double> nums(const std::string& key, std::vector<double> def = {});
    std::vector<std::string> strs(const std::string& key, std::vector<std::string> def);
    Section sub(const std::string& key);  // missing key gives an empty section
    void finish() const;

private:
    const nlohmann::json* get(const std::string& key);
    [[noreturn]] void fail(const std::string& key, const std::string& what) const;

    nlohmann::json j_;
    std::string path_;
    std::set<std::string> seen_;
};

struct RunContext {
    nlohmann::json config;  // whole document, {} when no --config
    std::string config_hash;
    std::uint64_t seed;
    std::string out_dir;
    unsigned threads = 0;
};

/// Reads the "params" block; falls back to (m, p, N, σ) = dflt when absent.
Params read_params(Section& root, const std::array<double, 4>& dflt);

inline constexpr std::array<double, 4> kP0{0.5, 2.0, 3.0, 4.5};
inline constexpr std::array<double, 4> kP1{0.5, 2.0, 1.0, 12.0};

}  // namespace fdx::cli
