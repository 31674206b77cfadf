#include "rig/simworld/trace.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rig::sim {

namespace {

constexpr const char* kHeader = "step,time,x,y,heading,speed,throttle,steer,brake,collisions,lane_invasions,plan";

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(const std::vector<TraceRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace for writing: " + path.string());
  out << kHeader << '\n';
  for (const TraceRow& r : rows) {
    out << r.step << ',' << fmt_double(r.time) << ',' << fmt_double(r.ego.position.x) << ','
        << fmt_double(r.ego.position.y) << ',' << fmt_double(r.ego.heading) << ',' << fmt_double(r.ego.speed) << ','
        << fmt_double(r.action.throttle()) << ',' << fmt_double(r.action.steer()) << ','
        << fmt_double(r.action.brake()) << ',' << r.events.collisions << ',' << r.events.lane_invasions << ',';
    for (std::size_t k = 0; k < r.plan.size(); ++k) {
      if (k) out << ';';
      out << fmt_double(r.plan[k].x) << ' ' << fmt_double(r.plan[k].y);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing trace: " + path.string());
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw std::runtime_error("not a trace file: " + path.string());
  std::vector<TraceRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() == 11) f.emplace_back();
    if (f.size() != 12) throw std::runtime_error("trace line " + std::to_string(lineno) + ": expected 12 fields");
    try {
      TraceRow r;
      r.step = std::stoi(f[0]);
      r.time = std::stod(f[1]);
      r.ego.position = {std::stod(f[2]), std::stod(f[3])};
      r.ego.heading = std::stod(f[4]);
      r.ego.speed = std::stod(f[5]);
      r.action = Action(std::stod(f[6]), std::stod(f[7]), std::stod(f[8]));
      r.events.collisions = std::stoi(f[9]);
      r.events.lane_invasions = std::stoi(f[10]);
      std::stringstream ps(f[11]);
      std::string pt;
      while (std::getline(ps, pt, ';')) {
        std::istringstream xy(pt);
        Vec2 p;
        if (!(xy >> p.x >> p.y)) throw std::invalid_argument("plan point");
        r.plan.push_back(p);
      }
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error("trace line " + std::to_string(lineno) + ": malformed field");
    }
  }
  return rows;
}

}  // namespace rig::sim
