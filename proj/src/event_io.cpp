#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "evfuse/error.hpp"
#include "evfuse/events.hpp"
#include "evfuse/trajectory_io.hpp"

namespace evfuse {
namespace {

// Splits on blanks/tabs; returns the number of tokens found (may exceed N).
template <std::size_t N>
std::size_t Tokenize(std::string_view line,
                     std::array<std::string_view, N>& tokens) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() &&
           (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r' ||
            line[pos] == ',')) {
      ++pos;
    }
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' &&
           line[end] != '\r' && line[end] != ',') {
      ++end;
    }
    if (count < N) tokens[count] = line.substr(pos, end - pos);
    ++count;
    pos = end;
  }
  return count;
}

bool IsBlankOrComment(std::string_view line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

template <typename T>
bool ParseNumber(std::string_view token, T& value) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc() && ptr == end;
}

std::string FormatDouble(double v) {
  std::array<char, 64> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::ifstream OpenForRead(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  return in;
}

std::ofstream OpenForWrite(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  return out;
}

void SortIfNeeded(std::vector<Event>& events) {
  if (!std::is_sorted(events.begin(), events.end(),
                      [](const Event& a, const Event& b) { return a.t < b.t; })) {
    // Stable: simultaneous events keep file order.
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
  }
}

}  // namespace

EventStream ParseEventText(std::istream& in, int width, int height,
                           const EventParseOptions& options) {
  if (width <= 0 || height <= 0 || width > 65536 || height > 65536) {
    throw Error(ErrorKind::kConfig, "invalid sensor size");
  }
  EventStream stream;
  stream.camera_id = options.camera_id;
  stream.width = width;
  stream.height = height;

  std::string line;
  std::size_t line_no = 0;
  double max_t = -INFINITY;
  std::array<std::string_view, 4> tok;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlankOrComment(line)) continue;
    if (Tokenize(line, tok) != 4) {
      throw LineError(ErrorKind::kParse, line_no,
                      "expected 4 fields \"t x y p\"");
    }
    Event e;
    if (options.microsecond_timestamps) {
      std::int64_t us = 0;
      if (!ParseNumber(tok[0], us) || us < 0) {
        throw LineError(ErrorKind::kParse, line_no, "bad timestamp");
      }
      e.t = static_cast<double>(us) * 1e-6;
    } else {
      if (!ParseNumber(tok[0], e.t) || !std::isfinite(e.t) || e.t < 0.0) {
        throw LineError(ErrorKind::kParse, line_no, "bad timestamp");
      }
    }
    long long x = 0, y = 0;
    int p = 0;
    if (!ParseNumber(tok[1], x) || !ParseNumber(tok[2], y)) {
      throw LineError(ErrorKind::kParse, line_no, "bad pixel coordinates");
    }
    if (!ParseNumber(tok[3], p) || (p != 0 && p != 1 && p != -1)) {
      throw LineError(ErrorKind::kParse, line_no, "bad polarity");
    }
    if (x < 0 || y < 0 || x >= width || y >= height) {
      throw LineError(ErrorKind::kOutOfBounds, line_no,
                      "pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                          ") outside " + std::to_string(width) + "x" +
                          std::to_string(height));
    }
    if (e.t < max_t - options.regression_tolerance) {
      throw LineError(ErrorKind::kOrdering, line_no, "timestamp regression");
    }
    max_t = std::max(max_t, e.t);
    e.x = static_cast<std::uint16_t>(x);
    e.y = static_cast<std::uint16_t>(y);
    e.polarity = p == 1 ? 1 : -1;
    stream.events.push_back(e);
  }
  SortIfNeeded(stream.events);
  return stream;
}

EventStream ReadEventTextFile(const std::string& path, int width, int height,
                              const EventParseOptions& options) {
  auto in = OpenForRead(path);
  return ParseEventText(in, width, height, options);
}

void WriteEventText(std::ostream& out, std::span<const Event> events) {
  std::string buf;
  for (const Event& e : events) {
    buf.clear();
    buf += FormatDouble(e.t);
    buf += ' ';
    buf += std::to_string(e.x);
    buf += ' ';
    buf += std::to_string(e.y);
    buf += e.polarity > 0 ? " 1\n" : " 0\n";
    out << buf;
  }
}

void WriteEventTextFile(const std::string& path, std::span<const Event> events) {
  auto out = OpenForWrite(path);
  WriteEventText(out, events);
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

void WriteEventBinary(std::ostream& out, std::span<const Event> events) {
  std::array<unsigned char, 13> rec;
  for (const Event& e : events) {
    const auto us = static_cast<std::uint64_t>(std::llround(e.t * 1e6));
    for (int i = 0; i < 8; ++i) rec[i] = static_cast<unsigned char>(us >> (8 * i));
    rec[8] = static_cast<unsigned char>(e.x & 0xff);
    rec[9] = static_cast<unsigned char>(e.x >> 8);
    rec[10] = static_cast<unsigned char>(e.y & 0xff);
    rec[11] = static_cast<unsigned char>(e.y >> 8);
    rec[12] = static_cast<unsigned char>(static_cast<std::int8_t>(e.polarity));
    out.write(reinterpret_cast<const char*>(rec.data()), rec.size());
  }
}

EventStream ReadEventBinary(std::istream& in, int width, int height,
                            const std::string& camera_id) {
  EventStream stream;
  stream.camera_id = camera_id;
  stream.width = width;
  stream.height = height;
  std::array<unsigned char, 13> rec;
  std::size_t index = 0;
  double max_t = -INFINITY;
  while (in.read(reinterpret_cast<char*>(rec.data()), rec.size())) {
    ++index;
    std::uint64_t us = 0;
    for (int i = 0; i < 8; ++i) us |= static_cast<std::uint64_t>(rec[i]) << (8 * i);
    Event e;
    e.t = static_cast<double>(us) * 1e-6;
    e.x = static_cast<std::uint16_t>(rec[8] | (rec[9] << 8));
    e.y = static_cast<std::uint16_t>(rec[10] | (rec[11] << 8));
    const auto p = static_cast<std::int8_t>(rec[12]);
    if (p != 1 && p != -1 && p != 0) {
      throw LineError(ErrorKind::kParse, index, "bad polarity record");
    }
    e.polarity = p == 1 ? 1 : -1;
    if (e.x >= width || e.y >= height) {
      throw LineError(ErrorKind::kOutOfBounds, index, "pixel outside sensor");
    }
    if (e.t < max_t) throw LineError(ErrorKind::kOrdering, index, "timestamp regression");
    max_t = e.t;
    stream.events.push_back(e);
  }
  if (in.gcount() != 0) {
    throw Error(ErrorKind::kParse, "truncated binary event record");
  }
  return stream;
}

std::span<const Event> SliceByTime(std::span<const Event> events,
                                   double t_begin, double t_end) {
  auto lo = std::lower_bound(events.begin(), events.end(), t_begin,
                             [](const Event& e, double t) { return e.t < t; });
  auto hi = std::lower_bound(lo, events.end(), t_end,
                             [](const Event& e, double t) { return e.t < t; });
  return {lo, hi};
}

std::vector<Packet> Packetize(const EventStream& stream, const PacketMode& mode) {
  std::vector<Packet> packets;
  const std::span<const Event> all(stream.events);
  if (const auto* by_count = std::get_if<ByCount>(&mode)) {
    if (by_count->count == 0) {
      throw Error(ErrorKind::kConfig, "packet count must be positive");
    }
    for (std::size_t begin = 0; begin < all.size(); begin += by_count->count) {
      const std::size_t n = std::min(by_count->count, all.size() - begin);
      const auto slice = all.subspan(begin, n);
      packets.push_back({stream.camera_id, slice.front().t, slice.back().t, slice});
    }
    return packets;
  }
  const double dt = std::get<ByDuration>(mode).seconds;
  if (!(dt > 0.0)) throw Error(ErrorKind::kConfig, "packet duration must be positive");
  if (all.empty()) return packets;
  const double t0 = all.front().t;
  std::size_t begin = 0;
  while (begin < all.size()) {
    const auto k = static_cast<long long>(std::floor((all[begin].t - t0) / dt));
    double w_start = t0 + static_cast<double>(k) * dt;
    double w_end = t0 + static_cast<double>(k + 1) * dt;
    if (all[begin].t >= w_end) {  // floating-point edge
      w_start = w_end;
      w_end += dt;
    }
    std::size_t end = begin;
    while (end < all.size() && all[end].t < w_end) ++end;
    packets.push_back({stream.camera_id, w_start, w_end, all.subspan(begin, end - begin)});
    begin = end;
  }
  return packets;
}

Trajectory ParseTrajectoryText(std::istream& in) {
  std::vector<PoseSample> samples;
  std::string line;
  std::size_t line_no = 0;
  std::array<std::string_view, 8> tok;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlankOrComment(line)) continue;
    if (Tokenize(line, tok) != 8) {
      throw LineError(ErrorKind::kParse, line_no,
                      "expected 8 fields \"t tx ty tz qx qy qz qw\"");
    }
    std::array<double, 8> v;
    for (int i = 0; i < 8; ++i) {
      if (!ParseNumber(tok[i], v[i]) || !std::isfinite(v[i])) {
        throw LineError(ErrorKind::kParse, line_no, "bad number");
      }
    }
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    const double norm = q.norm();
    if (norm < 1e-6) {
      throw LineError(ErrorKind::kParse, line_no, "near-zero quaternion");
    }
    if (std::abs(norm - 1.0) > 1e-3) {
      throw LineError(ErrorKind::kParse, line_no,
                      "quaternion norm " + std::to_string(norm) + " not unit");
    }
    if (!samples.empty() && !(v[0] > samples.back().t)) {
      throw LineError(ErrorKind::kOrdering, line_no,
                      "trajectory timestamps must strictly increase");
    }
    samples.push_back({v[0], Pose(q.normalized(), Eigen::Vector3d(v[1], v[2], v[3]))});
  }
  return Trajectory(std::move(samples));
}

Trajectory ReadTrajectoryFile(const std::string& path) {
  auto in = OpenForRead(path);
  return ParseTrajectoryText(in);
}

void WriteTrajectoryText(std::ostream& out, const Trajectory& trajectory) {
  for (const PoseSample& s : trajectory.samples()) {
    const auto& q = s.pose.rotation;
    const auto& t = s.pose.translation;
    out << FormatDouble(s.t) << ' ' << FormatDouble(t.x()) << ' '
        << FormatDouble(t.y()) << ' ' << FormatDouble(t.z()) << ' '
        << FormatDouble(q.x()) << ' ' << FormatDouble(q.y()) << ' '
        << FormatDouble(q.z()) << ' ' << FormatDouble(q.w()) << '\n';
  }
}

void WriteTrajectoryFile(const std::string& path, const Trajectory& trajectory) {
  auto out = OpenForWrite(path);
  WriteTrajectoryText(out, trajectory);
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

}  // namespace evfuse
