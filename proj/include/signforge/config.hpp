#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace signforge {

// `key = value` lines; '#' starts a comment. Typed getters record which keys
// were read so callers can reject unknown keys.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>");
  static KeyValueConfig read(const std::filesystem::path& path);

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool contains(std::string_view key) const { return values_.find(std::string(key)) != values_.end(); }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Keys present in the file that no getter asked for.
  std::set<std::string> unused_keys() const;
  // Throws InputError naming the first unused key.
  void reject_unused() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string source_ = "<config>";
  mutable std::set<std::string> used_;
};

}  // namespace signforge
