#include "ditas/kv.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ditas {

static std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

KvMap parse_kv(const std::string& text) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("kv: malformed line '" + t + "'");
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

KvMap load_kv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("kv: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_kv(ss.str());
}

void save_kv(const KvMap& kv, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("kv: cannot write " + path);
    for (const auto& [k, v] : kv) f << k << "=" << v << "\n";
    if (!f) throw std::runtime_error("kv: write failed for " + path);
}

std::string kv_get(const KvMap& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("kv: missing key '" + key + "'");
    return it->second;
}

std::string kv_get_or(const KvMap& kv, const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

std::vector<std::size_t> parse_index_list(const std::string& csv) {
    std::vector<std::size_t> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        out.push_back(static_cast<std::size_t>(std::stoull(tok)));
    }
    return out;
}

std::string join_index_list(const std::vector<std::size_t>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(xs[i]);
    }
    return s;
}

}  // namespace ditas
