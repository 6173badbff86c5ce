#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phaseshift/critical.hpp"
#include "phaseshift/detect.hpp"
#include "phaseshift/signals.hpp"
#include "phaseshift/types.hpp"

namespace phaseshift {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Writes to a temporary sibling, then renames over `path`.
void write_text_atomic(const fs::path& path, const std::string& content);
std::string read_text(const fs::path& path);

// Round-trip exact decimal text for a double.
std::string format_double(double v);

// Columns sharing one time base. CSV layout: index,time_s,<columns...>.
struct CsvTable {
  std::vector<std::string> names;
  std::vector<Vector> columns;
  double rate_hz = 1.0;
  Index start_index = 0;

  Index rows() const { return columns.empty() ? 0 : columns.front().size(); }
  const Vector& column(const std::string& name) const;
  bool has(const std::string& name) const;
  TimeSeries series(const std::string& name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<memory>");
void write_csv(const fs::path& path, const CsvTable& table);
// Reads the sample rate from the .meta.json sidecar when present, otherwise
// from the index and time_s columns.
CsvTable read_csv(const fs::path& path);

fs::path sidecar_path(const fs::path& csv);

void write_json(const fs::path& path, const Json& j);
Json read_json(const fs::path& path);

// FNV-1a 64-bit hash of a file's bytes, as 16 hex digits.
std::string file_checksum(const fs::path& path);
std::string text_checksum(const std::string& text);

Json to_json(const ShiftEvent& e, const std::string& method);
ShiftEvent event_from_json(const Json& j, double rate_hz);
Json to_json(const PhaseProfile& p);
PhaseProfile profile_from_json(const Json& j);
Json to_json(const DetectionResult& r);

Json to_json(const CriticalTable& t);
CriticalTable critical_table_from_json(const Json& j);

// Directory-backed store of JSON documents keyed by a descriptive string.
class ResultCache {
public:
  explicit ResultCache(fs::path dir) : dir_(std::move(dir)) {}

  // Directory from PHASESHIFT_CACHE_DIR unless `override_dir` is non-empty;
  // empty when neither is set.
  static std::optional<ResultCache> from_environment(const std::string& override_dir = {});

  std::optional<Json> load(const std::string& key) const;
  void store(const std::string& key, const Json& value) const;
  const fs::path& directory() const { return dir_; }

private:
  fs::path entry_path(const std::string& key) const;
  fs::path dir_;
};

}  // namespace phaseshift
