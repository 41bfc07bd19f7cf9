#include "sciml/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace sciml {

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::string trajectory_csv(const Trajectory& traj) {
  validate(traj);
  std::string out = "t,x,y\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out += format_double(traj.times[i]);
    out += ',';
    out += format_double(traj.states[i].x);
    out += ',';
    out += format_double(traj.states[i].y);
    out += '\n';
  }
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << trajectory_csv(traj);
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

namespace {

double parse_field(std::string_view field, const char* what) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw std::runtime_error(std::string("trajectory CSV: bad ") + what + " field '" +
                             std::string(field) + "'");
  return v;
}

}  // namespace

Trajectory parse_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y")
    throw std::runtime_error("trajectory CSV: expected header 't,x,y', got '" + line + "'");

  Trajectory traj;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("trajectory CSV: malformed row '" + line + "'");
    const std::string_view sv(line);
    traj.times.push_back(parse_field(sv.substr(0, c1), "t"));
    traj.states.push_back({parse_field(sv.substr(c1 + 1, c2 - c1 - 1), "x"),
                           parse_field(sv.substr(c2 + 1), "y")});
  }
  validate(traj);
  return traj;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_trajectory_csv(ss.str());
}

void write_loss_trace_csv(const std::filesystem::path& path,
                          const std::vector<TraceRow>& trace) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << "phase,iteration,loss\n";
  for (const TraceRow& row : trace)
    f << row.phase << ',' << row.iteration << ',' << format_double(row.loss) << '\n';
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace sciml
