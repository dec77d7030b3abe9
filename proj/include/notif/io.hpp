#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "notif/market.hpp"

namespace notif {

// Event log: delimited text, header `t,type_id,user_id,v,v_p`, one event per
// line, 1-based type and user ids, '.' as decimal point. Doubles are written
// in shortest round-trip form, so write + read is lossless.
inline constexpr const char* kEventLogHeader = "t,type_id,user_id,v,v_p";

std::vector<Event> read_event_log(const std::filesystem::path& path);

// Streams events to disk one line at a time.
class EventLogWriter {
 public:
  explicit EventLogWriter(const std::filesystem::path& path);
  void write(const Event& e);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

void write_event_log(const std::filesystem::path& path,
                     std::span<const Event> events);

// Instance file (JSON):
//   {
//     "n": 4, "m": 2000,
//     "budgets": [100, 3500, 2887, 4448],
//     "platform_budget": 0,
//     "supply": 5,                 // or "supplies": [s_1, ..., s_m]
//     "events": "events.csv"       // relative to the instance file
//   }
MarketInstance read_instance(const std::filesystem::path& path);

// Writes `<path>` and the event log next to it under `events_name`.
void write_instance(const std::filesystem::path& path,
                    const MarketInstance& inst,
                    const std::string& events_name = "events.csv");

// Shortest round-trip decimal form of a double.
std::string format_double(double x);

// Writes via a temporary file and rename, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

}  // namespace notif
