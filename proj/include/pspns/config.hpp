#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pspns/train_eval.hpp"

namespace pspns {

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument("bad numeric value for " + key + ": '" + v + "'");
    }
}

inline uint64_t parse_uint(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return static_cast<uint64_t>(x);
    } catch (...) {
        throw std::invalid_argument("bad integer value for " + key + ": '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("bad boolean value for " + key + ": '" + v + "'");
}

inline std::vector<uint32_t> parse_uint_list(const std::string& key, const std::string& v) {
    std::vector<uint32_t> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) throw std::invalid_argument("empty element in list for " + key);
        out.push_back(static_cast<uint32_t>(parse_uint(key, tok)));
    }
    if (out.empty()) throw std::invalid_argument("empty list for " + key);
    return out;
}

}  // namespace detail

// One key=value assignment; shared by the config-file parser and flag
// overrides so both spell keys identically.
inline void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_uint;
    using detail::parse_uint_list;
    if (key == "d") cfg.dim = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "lr") cfg.lr = parse_double(key, value);
    else if (key == "batch_size") cfg.batch_size = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "l2") cfg.l2 = parse_double(key, value);
    else if (key == "beta1") cfg.beta1 = parse_double(key, value);
    else if (key == "beta2") cfg.beta2 = parse_double(key, value);
    else if (key == "eps") cfg.eps = parse_double(key, value);
    else if (key == "max_epochs") cfg.max_epochs = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "patience") cfg.patience = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "eval_every") cfg.eval_every = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "ks") cfg.ks = parse_uint_list(key, value);
    else if (key == "q") cfg.svd_rank = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "oversample") cfg.svd_oversample = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "power_iters") cfg.svd_power_iters = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "s") cfg.fuse_s = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "mode") cfg.mode = parse_psp_mode(value);
    else if (key == "scheme") cfg.scheme = parse_weight_scheme(value);
    else if (key == "a") cfg.weight_a = parse_double(key, value);
    else if (key == "cap") cfg.weight_cap = parse_double(key, value);
    else if (key == "sampler") cfg.sampler.kind = parse_sampler_kind(value);
    else if (key == "sampler.exponent") cfg.sampler.popularity_exponent = parse_double(key, value);
    else if (key == "sampler.candidates") cfg.sampler.candidate_count = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "sampler.exclude_psp") cfg.sampler.exclude_psp_positives = parse_bool(key, value);
    else if (key == "seed") cfg.seed = parse_uint(key, value);
    else throw std::invalid_argument("unknown key '" + key + "'");
}

// Flat key=value file; '#' starts a comment, blank lines skipped.
inline TrainConfig parse_train_config(std::istream& is, TrainConfig base = {}) {
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) + " is not key=value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config: line " + std::to_string(line_no) + " has empty key or value");
        try {
            apply_config_entry(base, key, value);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

inline TrainConfig load_train_config(const std::string& path, TrainConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    return parse_train_config(in, base);
}

// Deterministic echo of every setting, for report files.
inline std::map<std::string, std::string> config_entries(const TrainConfig& cfg) {
    auto fmt = [](double x) {
        std::ostringstream os;
        os.precision(17);
        os << x;
        return os.str();
    };
    std::map<std::string, std::string> m;
    m["d"] = std::to_string(cfg.dim);
    m["lr"] = fmt(cfg.lr);
    m["batch_size"] = std::to_string(cfg.batch_size);
    m["l2"] = fmt(cfg.l2);
    m["beta1"] = fmt(cfg.beta1);
    m["beta2"] = fmt(cfg.beta2);
    m["eps"] = fmt(cfg.eps);
    m["max_epochs"] = std::to_string(cfg.max_epochs);
    m["patience"] = std::to_string(cfg.patience);
    m["eval_every"] = std::to_string(cfg.eval_every);
    std::string ks;
    for (size_t i = 0; i < cfg.ks.size(); ++i) ks += (i ? "," : "") + std::to_string(cfg.ks[i]);
    m["ks"] = ks;
    m["q"] = std::to_string(cfg.svd_rank);
    m["oversample"] = std::to_string(cfg.svd_oversample);
    m["power_iters"] = std::to_string(cfg.svd_power_iters);
    m["s"] = std::to_string(cfg.fuse_s);
    m["mode"] = to_string(cfg.mode);
    m["scheme"] = to_string(cfg.scheme);
    m["a"] = fmt(cfg.weight_a);
    m["cap"] = fmt(cfg.weight_cap);
    m["sampler"] = to_string(cfg.sampler.kind);
    m["sampler.exponent"] = fmt(cfg.sampler.popularity_exponent);
    m["sampler.candidates"] = std::to_string(cfg.sampler.candidate_count);
    m["sampler.exclude_psp"] = cfg.sampler.exclude_psp_positives ? "true" : "false";
    m["seed"] = std::to_string(cfg.seed);
    return m;
}

}  // namespace pspns
