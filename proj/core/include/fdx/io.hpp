#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace fdx::io {

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view data) noexcept;

/// Hash of the canonical (sorted-key, compact) dump of a config, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

struct Provenance {
    std::string version = FDX_VERSION;
    std::string config_hash;
    std::uint64_t seed = 0;
};

/// Writes to a sibling temp file and renames over path. Throws Error(Io).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Shortest round-trip text for a double ("nan", "inf", "-inf" for non-finite).
std::string format_double(double v);

using Cell = std::variant<double, long long, std::string>;

/// RFC-4180 table preceded by "# key: value" metadata lines.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void meta(std::string key, std::string value);
    void provenance(const Provenance& p);
    void row(std::vector<Cell> cells);

    std::size_t rows() const noexcept { return rows_.size(); }
    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::pair<std::string, std::string>> meta_;
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

std::string csv_escape(const std::string& field);

/// Adds version/config_hash/seed under "_meta" and writes pretty JSON atomically.
void write_json(const std::filesystem::path& path, nlohmann::ordered_json j, const Provenance& p);

/// Minimal line plot.
class SvgPlot {
public:
    SvgPlot(double width, double height);

    void set_limits(double x0, double x1, double y0, double y1);
    void set_labels(std::string title, std::string xlabel, std::string ylabel);
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                  double width = 1.0, double opacity = 1.0);
    void vline(double x, const std::string& color, const std::string& label, bool dashed = true);
    void hline(double y, const std::string& color, const std::string& label, bool dashed = true);
    void legend(const std::string& text, const std::string& color);
    void comment(const std::string& text);

    std::string str() const;

private:
    double px(double x) const;
    double py(double y) const;

    double w_, h_;
    double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;
    std::string title_, xlabel_, ylabel_;
    std::vector<std::string> body_;
    std::vector<std::pair<std::string, std::string>> legend_;
    std::vector<std::string> comments_;
};

}  // namespace fdx::io
