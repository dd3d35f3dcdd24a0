#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rangecap {

enum class ValueType { kInt, kUInt, kReal, kString, kUIntList, kRealList, kIntList };

struct KeySpec {
  std::string name;
  ValueType type;
  /// empty with required = true means the key must be supplied
  std::string default_value;
  std::string help;
  bool required = false;
  /// excluded from the config hash (worker count, output location)
  bool runtime_only = false;
};

/// Keys accepted by a command path such as "experiment.clt" or "green.eval".
const std::vector<KeySpec>& command_schema(const std::string& command);
std::vector<std::string> command_paths();

/// Flat sectioned key-value file. Section names are command paths; keys in the
/// unnamed section or in [common] apply to every command.
using IniFile = std::map<std::string, std::map<std::string, std::string>>;
IniFile read_ini_file(const std::string& path);
IniFile parse_ini(const std::string& text);

/// Resolved, validated configuration of one command.
class RunConfig {
 public:
  RunConfig() = default;

  const std::string& command() const noexcept { return command_; }

  bool has(const std::string& key) const { return values_.count(key) != 0 && !values_.at(key).empty(); }
  const std::string& raw(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_real(const std::string& key) const;
  std::string get_string(const std::string& key) const { return raw(key); }
  std::vector<std::uint64_t> get_uint_list(const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;
  std::vector<double> get_real_list(const std::string& key) const;

  /// Canonical `key=value` lines in key order, runtime-only keys omitted.
  std::string serialize() const;
  /// Every key including runtime-only ones.
  std::string serialize_all() const;
  /// FNV-1a 64 of serialize(), as 16 hex digits.
  std::string hash() const;

  /// Layers file sections and flag overrides over the schema defaults and
  /// validates the result. Throws ValidationError listing every violation.
  static RunConfig resolve(const std::string& command, const IniFile& file,
                           const std::map<std::string, std::string>& overrides);

 private:
  std::string command_;
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> runtime_only_;
};

std::uint64_t fnv1a64(const std::string& s) noexcept;

/// Comma- or space-separated list; "a:b" inside a uint list expands to powers of two 2^a..2^b.
std::vector<std::uint64_t> parse_uint_list(const std::string& s);
std::vector<double> parse_real_list(const std::string& s);
std::vector<std::int64_t> parse_int_list(const std::string& s);

}  // namespace rangecap
