#pragma once

#include <map>
#include <string>
#include <vector>

namespace ditas {

// Flat key=value text files, one pair per line. '#' starts a comment.
// Used for both training configs and stego manifests.
using KvMap = std::map<std::string, std::string>;

KvMap parse_kv(const std::string& text);
KvMap load_kv(const std::string& path);
void save_kv(const KvMap& kv, const std::string& path);

std::string kv_get(const KvMap& kv, const std::string& key);
std::string kv_get_or(const KvMap& kv, const std::string& key, const std::string& fallback);

std::vector<std::size_t> parse_index_list(const std::string& csv);
std::string join_index_list(const std::vector<std::size_t>& xs);

}  // namespace ditas
