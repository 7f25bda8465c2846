#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace evoplace::store {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

/// A run directory of append-only JSONL files plus JSON snapshots. Appends
/// are serialized and flushed line by line.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  /// Writes {"record":"header","schema":1,...meta} when `file` is new or
  /// empty. On an existing file the stored header must agree with `meta`
  /// on every key present in both (InvalidArgument otherwise).
  json open_log(const std::string& file, const json& meta);

  void append(const std::string& file, const json& record);

  /// All non-header records. A torn final line (no newline) is dropped and,
  /// when `repair` is set, cut from the file; any other unreadable line is
  /// CorruptStore with its 1-based record index.
  std::vector<json> read(const std::string& file, bool repair = false) const;
  std::optional<json> header(const std::string& file) const;

  /// Atomic replace via a temporary file.
  void write_json(const std::string& file, const json& value) const;
  std::optional<json> read_json(const std::string& file) const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

/// Shortest round-trip number formatting keeps logs byte-stable.
std::string dump_line(const json& record);

}  // namespace evoplace::store
