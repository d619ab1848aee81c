#include "fdx/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fdx/error.hpp"

namespace fdx::io {

std::uint64_t fnv1a64(std::string_view data) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const nlohmann::json& config) {
    // nlohmann::json keeps object keys sorted, so dump() is canonical
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::Io, "output directory does not exist: " + dir.string());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error(ErrorCode::Io, "write failed: " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::Io, "cannot rename onto " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw Error(ErrorCode::Io, "CSV header must not be empty");
}

void CsvTable::meta(std::string key, std::string value) {
    for (char& c : value)
        if (c == '\n' || c == '\r') c = ' ';
    meta_.emplace_back(std::move(key), std::move(value));
}

void CsvTable::provenance(const Provenance& p) {
    meta("version", p.version);
    meta("config_hash", p.config_hash);
    meta("seed", std::to_string(p.seed));
}

void CsvTable::row(std::vector<Cell> cells) {
    if (cells.size() != header_.size()) throw Error(ErrorCode::Io, "CSV row width does not match header");
    rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
    std::string out;
    for (const auto& [k, v] : meta_) out += "# " + k + ": " + v + "\r\n";
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(header_[i]);
    }
    out += "\r\n";
    for (const auto& r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            std::visit(
                [&out](const auto& c) {
                    using T = std::decay_t<decltype(c)>;
                    if constexpr (std::is_same_v<T, double>) out += format_double(c);
                    else if constexpr (std::is_same_v<T, long long>) out += std::to_string(c);
                    else out += csv_escape(c);
                },
                r[i]);
        }
        out += "\r\n";
    }
    return out;
}

void CsvTable::write(const std::filesystem::path& path) const { write_file_atomic(path, str()); }

void write_json(const std::filesystem::path& path, nlohmann::ordered_json j, const Provenance& p) {
    nlohmann::ordered_json meta{{"version", p.version}, {"config_hash", p.config_hash}, {"seed", p.seed}};
    if (j.is_object()) {
        nlohmann::ordered_json out{{"_meta", meta}};
        for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value();
        j = std::move(out);
    } else {
        j = nlohmann::ordered_json{{"_meta", meta}, {"data", j}};
    }
    write_file_atomic(path, j.dump(2) + "\n");
}

namespace {

constexpr double kMargin = 60.0;

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace

SvgPlot::SvgPlot(double width, double height) : w_(width), h_(height) {}

void SvgPlot::set_limits(double x0, double x1, double y0, double y1) {
    if (!(x1 > x0) || !(y1 > y0)) throw Error(ErrorCode::BadRange, "empty plot limits");
    x0_ = x0;
    x1_ = x1;
    y0_ = y0;
    y1_ = y1;
}

void SvgPlot::set_labels(std::string title, std::string xlabel, std::string ylabel) {
    title_ = std::move(title);
    xlabel_ = std::move(xlabel);
    ylabel_ = std::move(ylabel);
}

double SvgPlot::px(double x) const { return kMargin + (x - x0_) / (x1_ - x0_) * (w_ - 2 * kMargin); }
double SvgPlot::py(double y) const { return h_ - kMargin - (y - y0_) / (y1_ - y0_) * (h_ - 2 * kMargin); }

void SvgPlot::polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                       double width, double opacity) {
    std::string d;
    bool pen = false;
    for (const auto& [x, y] : pts) {
        const bool in = std::isfinite(x) && std::isfinite(y) && x >= x0_ && x <= x1_ && y >= y0_ && y <= y1_;
        if (!in) {
            pen = false;
            continue;
        }
        d += pen ? " L" : " M";
        d += fmt(px(x)) + " " + fmt(py(y));
        pen = true;
    }
    if (d.empty()) return;
    body_.push_back("<path d=\"" + d.substr(1) + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
                    fmt(width) + "\" stroke-opacity=\"" + fmt(opacity) + "\"/>");
}

void SvgPlot::vline(double x, const std::string& color, const std::string& label, bool dashed) {
    const std::string dash = dashed ? " stroke-dasharray=\"6 4\"" : "";
    body_.push_back("<line x1=\"" + fmt(px(x)) + "\" y1=\"" + fmt(py(y0_)) + "\" x2=\"" + fmt(px(x)) + "\" y2=\"" +
                    fmt(py(y1_)) + "\" stroke=\"" + color + "\"" + dash + "/>");
    body_.push_back("<text x=\"" + fmt(px(x) + 4) + "\" y=\"" + fmt(py(y1_) + 14) + "\" fill=\"" + color +
                    "\" font-size=\"12\">" + xml_escape(label) + "</text>");
}

void SvgPlot::hline(double y, const std::string& color, const std::string& label, bool dashed) {
    const std::string dash = dashed ? " stroke-dasharray=\"6 4\"" : "";
    body_.push_back("<line x1=\"" + fmt(px(x0_)) + "\" y1=\"" + fmt(py(y)) + "\" x2=\"" + fmt(px(x1_)) + "\" y2=\"" +
                    fmt(py(y)) + "\" stroke=\"" + color + "\"" + dash + "/>");
    body_.push_back("<text x=\"" + fmt(px(x0_) + 4) + "\" y=\"" + fmt(py(y) - 4) + "\" fill=\"" + color +
                    "\" font-size=\"12\">" + xml_escape(label) + "</text>");
}

void SvgPlot::legend(const std::string& text, const std::string& color) { legend_.emplace_back(text, color); }

void SvgPlot::comment(const std::string& text) {
    std::string t = text;
    for (std::size_t k; (k = t.find("--")) != std::string::npos;) t.replace(k, 2, "- -");
    comments_.push_back(t);
}

std::string SvgPlot::str() const {
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    for (const auto& c : comments_) os << "<!-- " << c << " -->\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w_) << "\" height=\"" << fmt(h_)
       << "\" viewBox=\"0 0 " << fmt(w_) << " " << fmt(h_) << "\" font-family=\"sans-serif\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<rect x=\"" << fmt(kMargin) << "\" y=\"" << fmt(kMargin) << "\" width=\"" << fmt(w_ - 2 * kMargin)
       << "\" height=\"" << fmt(h_ - 2 * kMargin) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = x0_ + k * (x1_ - x0_) / 5, yv = y0_ + k * (y1_ - y0_) / 5;
        os << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << fmt(h_ - kMargin + 16)
           << "\" font-size=\"11\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
        os << "<text x=\"" << fmt(kMargin - 6) << "\" y=\"" << fmt(py(yv) + 4)
           << "\" font-size=\"11\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
    }
    os << "<text x=\"" << fmt(w_ / 2) << "\" y=\"" << fmt(kMargin / 2 - 6)
       << "\" font-size=\"15\" text-anchor=\"middle\">" << xml_escape(title_) << "</text>\n";
    os << "<text x=\"" << fmt(w_ / 2) << "\" y=\"" << fmt(h_ - 16) << "\" font-size=\"13\" text-anchor=\"middle\">"
       << xml_escape(xlabel_) << "</text>\n";
    os << "<text x=\"16\" y=\"" << fmt(h_ / 2) << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << fmt(h_ / 2) << ")\">" << xml_escape(ylabel_) << "</text>\n";
    os << "<g clip-path=\"none\">\n";
    for (const auto& b : body_) os << b << "\n";
    os << "</g>\n";
    // legend in a row above the frame, right-aligned
    double lx = w_ - kMargin;
    for (auto it = legend_.rbegin(); it != legend_.rend(); ++it) {
        lx -= 15.0 + 7.0 * static_cast<double>(it->first.size());
        os << "<rect x=\"" << fmt(lx) << "\" y=\"" << fmt(kMargin - 17) << "\" width=\"10\" height=\"10\" fill=\""
           << it->second << "\"/>";
        os << "<text x=\"" << fmt(lx + 14) << "\" y=\"" << fmt(kMargin - 8) << "\" font-size=\"12\">"
           << xml_escape(it->first) << "</text>\n";
        lx -= 10.0;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace fdx::io
