#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace evfuse {

// One brightness-change sample. Timestamps are seconds.
struct Event {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  double t = 0.0;
  std::int8_t polarity = 1;  // +1 or -1

  bool operator==(const Event&) const = default;
};

struct EventStream {
  std::string camera_id;
  int width = 0;
  int height = 0;
  std::vector<Event> events;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
};

// A contiguous, time-bounded view into an EventStream. The stream must
// outlive its packets.
struct Packet {
  std::string camera_id;
  double t_start = 0.0;
  double t_end = 0.0;
  std::span<const Event> events;
};

struct ByCount {
  std::size_t count = 0;
};
struct ByDuration {
  double seconds = 0.0;
};
using PacketMode = std::variant<ByCount, ByDuration>;

struct EventParseOptions {
  // Maximum tolerated timestamp regression (seconds). Regressing events are
  // re-sorted when within tolerance; beyond it parsing fails.
  double regression_tolerance = 0.0;
  // First column holds integer microseconds instead of seconds.
  bool microsecond_timestamps = false;
  std::string camera_id;
};

EventStream ParseEventText(std::istream& in, int width, int height,
                           const EventParseOptions& options = {});
EventStream ReadEventTextFile(const std::string& path, int width, int height,
                              const EventParseOptions& options = {});

// Canonical text form: "t x y p" with the shortest round-trip decimal for t
// and p written as 1 / 0.
void WriteEventText(std::ostream& out, std::span<const Event> events);
void WriteEventTextFile(const std::string& path, std::span<const Event> events);

// Packed little-endian records: u64 microseconds, u16 x, u16 y, i8 polarity.
void WriteEventBinary(std::ostream& out, std::span<const Event> events);
EventStream ReadEventBinary(std::istream& in, int width, int height,
                            const std::string& camera_id = {});

// Splits a time-sorted stream into non-overlapping packets covering it.
std::vector<Packet> Packetize(const EventStream& stream, const PacketMode& mode);

// Events with t in [t_begin, t_end). Requires a time-sorted range.
std::span<const Event> SliceByTime(std::span<const Event> events,
                                   double t_begin, double t_end);

}  // namespace evfuse
