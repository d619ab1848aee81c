#include "config.hpp"

#include "fdx/error.hpp"

namespace fdx::cli {

Section::Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_.is_null()) j_ = nlohmann::json::object();
    if (!j_.is_object()) throw Error(ErrorCode::Config, path_ + " must be a JSON object");
}

void Section::fail(const std::string& key, const std::string& what) const {
    throw Error(ErrorCode::Config, path_ + "." + key + " " + what);
}

bool Section::has(const std::string& key) const { return j_.contains(key); }

const nlohmann::json* Section::get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
}

double Section::num(const std::string& key, double def) {
    const auto* v = get(key);
    if (!v) return def;
    if (!v->is_number()) fail(key, "must be a number");
    return v->get<double>();
}

double Section::num(const std::string& key) {
    const auto* v = get(key);
    if (!v) fail(key, "is required");
    if (!v->is_number()) fail(key, "must be a number");
    return v->get<double>();
}

long long Section::integer(const std::string& key, long long def) {
    const auto* v = get(key);
    if (!v) return def;
    if (!v->is_number_integer()) fail(key, "must be an integer");
    return v->get<long long>();
}

bool Section::flag(const std::string& key, bool def) {
    const auto* v = get(key);
    if (!v) return def;
    if (!v->is_boolean()) fail(key, "must be true or false");
    return v->get<bool>();
}

std::string Section::str(const std::string& key, const std::string& def) {
    const auto* v = get(key);
    if (!v) return def;
    if (!v->is_string()) fail(key, "must be a string");
    return v->get<std::string>();
}

std::vector<double> Section::nums(const std::string& key, std::vector<double> def) {
    const auto* v = get(key);
    if (!v) return def;
    if (v->is_number()) return {v->get<double>()};
    if (!v->is_array()) fail(key, "must be a number or an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number()) fail(key, "must contain only numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<std::string> Section::strs(const std::string& key, std::vector<std::string> def) {
    const auto* v = get(key);
    if (!v) return def;
    if (!v->is_array()) fail(key, "must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *v) {
        if (!e.is_string()) fail(key, "must contain only strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

Section Section::sub(const std::string& key) {
    const auto* v = get(key);
    return Section(v ? *v : nlohmann::json::object(), path_ + "." + key);
}

void Section::finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
        if (!seen_.count(it.key())) throw Error(ErrorCode::Config, "unknown key " + path_ + "." + it.key());
}

Params read_params(Section& root, const std::array<double, 4>& dflt) {
    if (!root.has("params")) {
        root.sub("params");
        return validate_params(dflt[0], dflt[1], dflt[2], dflt[3]);
    }
    Section p = root.sub("params");
    const double m = p.num("m"), pp = p.num("p"), N = p.num("N"), s = p.num("sigma");
    p.finish();
    return validate_params(m, pp, N, s);
}

}  // namespace fdx::cli
