#include "phaseshift/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace phaseshift {

void write_text_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename temporary file onto " + path.string());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const Vector& CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return columns[i];
  std::string available;
  for (const auto& n : names) available += (available.empty() ? "" : ", ") + n;
  throw std::invalid_argument("no column '" + name + "' (available: " + available + ")");
}

bool CsvTable::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

TimeSeries CsvTable::series(const std::string& name) const {
  return TimeSeries{column(name), rate_hz, start_index};
}

std::string to_csv(const CsvTable& table) {
  for (const auto& c : table.columns)
    if (c.size() != table.rows()) throw std::invalid_argument("to_csv: columns differ in length");
  std::string out = "index,time_s";
  for (const auto& n : table.names) out += "," + n;
  out += "\n";
  for (Index i = 0; i < table.rows(); ++i) {
    const Index idx = table.start_index + i;
    out += std::to_string(idx);
    out += ",";
    out += format_double(static_cast<double>(idx) / table.rate_hz);
    for (const auto& c : table.columns) {
      out += ",";
      out += format_double(c[i]);
    }
    out += "\n";
  }
  return out;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(origin + ": empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.size() < 3 || header[0] != "index" || header[1] != "time_s")
    throw std::invalid_argument(origin + ": header must start with index,time_s and name at least one channel");

  CsvTable t;
  t.names.assign(header.begin() + 2, header.end());
  std::vector<std::vector<double>> cols(header.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::size_t k = 0;
    while (std::getline(ss, field, ',')) {
      if (k >= header.size()) {
        ++k;
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (field.empty() || end != field.c_str() + field.size())
        throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": cannot parse '" + field +
                                    "' as a number");
      cols[k++].push_back(v);
    }
    if (!line.empty() && line.back() == ',') ++k;
    if (k != header.size())
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, found " + std::to_string(k));
  }
  if (cols[0].empty()) throw std::invalid_argument(origin + ": no data rows");

  const auto& idx = cols[0];
  const auto& time = cols[1];
  t.start_index = static_cast<Index>(idx.front());
  if (idx.size() >= 2) {
    const double span = time.back() - time.front();
    if (!(span > 0.0)) throw std::invalid_argument(origin + ": time_s must increase");
    t.rate_hz = (idx.back() - idx.front()) / span;
  } else {
    t.rate_hz = time.front() > 0.0 ? idx.front() / time.front() : 1.0;
  }
  for (std::size_t k = 2; k < cols.size(); ++k)
    t.columns.push_back(Eigen::Map<const Vector>(cols[k].data(), static_cast<Index>(cols[k].size())));
  return t;
}

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".meta.json");
  return p;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  write_text_atomic(path, to_csv(table));
}

CsvTable read_csv(const fs::path& path) {
  CsvTable t = parse_csv(read_text(path), path.string());
  const fs::path meta = sidecar_path(path);
  if (fs::exists(meta)) {
    const Json j = read_json(meta);
    if (j.contains("rate_hz")) t.rate_hz = j.at("rate_hz").get<double>();
  }
  return t;
}

void write_json(const fs::path& path, const Json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

Json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": invalid JSON: " + e.what());
  }
}

std::string text_checksum(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_checksum(const fs::path& path) { return text_checksum(read_text(path)); }

Json to_json(const ShiftEvent& e, const std::string& method) {
  return Json{{"index", e.index},         {"time_s", e.time_s},   {"magnitude_rad", e.magnitude},
              {"statistic", e.statistic}, {"threshold", e.threshold}, {"t_L", e.t_lower},
              {"t_U", e.t_upper},         {"method", method}};
}

ShiftEvent event_from_json(const Json& j, double rate_hz) {
  ShiftEvent e;
  e.index = j.at("index").get<Index>();
  e.time_s = j.contains("time_s") ? j.at("time_s").get<double>() : static_cast<double>(e.index) / rate_hz;
  e.magnitude = j.value("magnitude_rad", j.value("delta", 0.0));
  e.statistic = j.value("statistic", 0.0);
  e.threshold = j.value("threshold", 0.0);
  e.t_lower = j.value("t_L", e.index);
  e.t_upper = j.value("t_U", e.index);
  return e;
}

Json to_json(const PhaseProfile& p) {
  Json events = Json::array();
  for (const auto& s : p.events) events.push_back({{"index", s.index}, {"delta", s.delta}});
  return Json{{"base_phase", p.base_phase}, {"events", events}, {"truncated", p.truncated}};
}

PhaseProfile profile_from_json(const Json& j) {
  PhaseProfile p;
  p.base_phase = j.value("base_phase", 0.0);
  p.truncated = j.value("truncated", std::size_t{0});
  for (const auto& e : j.at("events")) p.events.push_back({e.at("index").get<Index>(), e.at("delta").get<double>()});
  return p;
}

Json to_json(const DetectionResult& r) {
  const std::string method = to_string(r.method);
  Json events = Json::array();
  for (const auto& e : r.events) events.push_back(to_json(e, method));
  Json tests = Json::array();
  for (const auto& t : r.tests)
    tests.push_back({{"begin", t.begin},
                     {"end", t.end},
                     {"statistic", t.statistic},
                     {"threshold", t.threshold},
                     {"rejected", t.rejected}});
  Json j{{"events", events}, {"segments", tests}};
  if (!r.thresholds.empty()) j["thresholds"] = r.thresholds;
  return j;
}

Json to_json(const CriticalTable& t) {
  return Json{{"kind", to_string(t.kind())}, {"lengths", t.lengths()}, {"maxima", t.maxima()}};
}

CriticalTable critical_table_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  StatKind k;
  if (kind == to_string(StatKind::Cusum))
    k = StatKind::Cusum;
  else if (kind == to_string(StatKind::PhaseDerivative))
    k = StatKind::PhaseDerivative;
  else
    throw std::invalid_argument("critical table: unknown statistic '" + kind + "'");
  return CriticalTable(k, j.at("lengths").get<std::vector<Index>>(),
                       j.at("maxima").get<std::vector<std::vector<double>>>());
}

std::optional<ResultCache> ResultCache::from_environment(const std::string& override_dir) {
  if (!override_dir.empty()) return ResultCache(override_dir);
  if (const char* env = std::getenv("PHASESHIFT_CACHE_DIR"); env && *env) return ResultCache(env);
  return std::nullopt;
}

fs::path ResultCache::entry_path(const std::string& key) const {
  return dir_ / (text_checksum(key) + ".json");
}

std::optional<Json> ResultCache::load(const std::string& key) const {
  const fs::path p = entry_path(key);
  if (!fs::exists(p)) return std::nullopt;
  try {
    Json j = read_json(p);
    if (j.value("key", std::string{}) != key) return std::nullopt;
    return j.at("value");
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void ResultCache::store(const std::string& key, const Json& value) const {
  write_text_atomic(entry_path(key), Json{{"key", key}, {"value", value}}.dump() + "\n");
}

}  // namespace phaseshift
