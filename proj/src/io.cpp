#include "notif/io.hpp"

#include <charconv>
#include <sstream>

#include "json.hpp"
#include "notif/error.hpp"

namespace notif {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T parse_field(std::string_view field, const std::string& file,
              std::size_t line, const char* name) {
  field = trim(field);
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError(file, line,
                     std::string("bad ") + name + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::vector<Event> read_event_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open event log");
  const std::string file = path.string();
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(file, 1, "missing header row");
  ++lineno;
  if (trim(line) != kEventLogHeader) {
    throw ParseError(file, lineno,
                     std::string("expected header '") + kEventLogHeader + "'");
  }
  std::vector<Event> events;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    std::string_view fields[5];
    std::size_t count = 0;
    for (;;) {
      const auto comma = rest.find(',');
      if (count == 5) {
        throw ParseError(file, lineno, "expected 5 columns, got more");
      }
      fields[count++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (count != 5) {
      throw ParseError(file, lineno,
                       "expected 5 columns, got " + std::to_string(count));
    }
    Event e;
    e.t = parse_field<std::int64_t>(fields[0], file, lineno, "t");
    const auto type = parse_field<std::int64_t>(fields[1], file, lineno, "type_id");
    const auto user = parse_field<std::int64_t>(fields[2], file, lineno, "user_id");
    if (type < 1 || user < 1) {
      throw ParseError(file, lineno, "type_id and user_id are 1-based");
    }
    e.type = static_cast<std::size_t>(type - 1);
    e.user = static_cast<std::size_t>(user - 1);
    e.v = parse_field<double>(fields[3], file, lineno, "v");
    e.v_p = parse_field<double>(fields[4], file, lineno, "v_p");
    events.push_back(e);
  }
  return events;
}

EventLogWriter::EventLogWriter(const fs::path& path) : path_(path), out_(path) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  out_ << kEventLogHeader << '\n';
}

void EventLogWriter::write(const Event& e) {
  out_ << e.t << ',' << e.type + 1 << ',' << e.user + 1 << ','
       << format_double(e.v) << ',' << format_double(e.v_p) << '\n';
}

void EventLogWriter::close() {
  out_.close();
  if (!out_) throw std::runtime_error("error writing " + path_.string());
}

void write_event_log(const fs::path& path, std::span<const Event> events) {
  EventLogWriter w(path);
  for (const Event& e : events) w.write(e);
  w.close();
}

MarketInstance read_instance(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open instance file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ParseError(path.string(), 0, err.what());
  }
  try {
    const auto n = doc.at("n").get<std::size_t>();
    const auto m = doc.at("m").get<std::size_t>();
    auto budgets = doc.at("budgets").get<std::vector<double>>();
    const double platform = doc.value("platform_budget", 0.0);
    std::vector<std::int64_t> supplies;
    if (doc.contains("supplies")) {
      supplies = doc.at("supplies").get<std::vector<std::int64_t>>();
    } else {
      supplies.assign(m, doc.at("supply").get<std::int64_t>());
    }
    fs::path events_path = doc.at("events").get<std::string>();
    if (events_path.is_relative()) events_path = path.parent_path() / events_path;
    auto events = read_event_log(events_path);
    return MarketInstance(n, m, std::move(budgets), platform,
                          std::move(supplies), std::move(events));
  } catch (const json::exception& err) {
    throw ParseError(path.string(), 0, err.what());
  }
}

void write_instance(const fs::path& path, const MarketInstance& inst,
                    const std::string& events_name) {
  json doc;
  doc["n"] = inst.n();
  doc["m"] = inst.m();
  doc["budgets"] = std::vector<double>(inst.budgets().begin(), inst.budgets().end());
  doc["platform_budget"] = inst.platform_budget();
  doc["supplies"] = std::vector<std::int64_t>(inst.supplies().begin(),
                                              inst.supplies().end());
  doc["events"] = events_name;
  write_event_log(path.parent_path() / events_name, inst.events());
  write_file_atomic(path, doc.dump(2) + "\n");
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("error writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace notif
