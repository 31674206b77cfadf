#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rig/dataset/dataset.hpp"

namespace rig::data {

namespace {

using Kind = DatasetError::Kind;

constexpr int kLambda = 3;

std::size_t record_floats(int tau, int horizon, int grid) {
  return static_cast<std::size_t>(tau + 1) * 2 + static_cast<std::size_t>(grid) * grid * sim::kChannels + kLambda +
         static_cast<std::size_t>(horizon) * 2;
}

void put_f32(std::string& buf, float v) {
  std::uint32_t u = std::bit_cast<std::uint32_t>(v);
  for (int k = 0; k < 4; ++k) buf.push_back(static_cast<char>((u >> (8 * k)) & 0xFFu));
}

float get_f32(const unsigned char* p) {
  std::uint32_t u = 0;
  for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(p[k]) << (8 * k);
  return std::bit_cast<float>(u);
}

std::uint32_t crc_of(const std::string& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path, std::uint64_t seed) {
  const int tau = samples.empty() ? 0 : samples.front().tau;
  const int horizon = samples.empty() ? 0 : samples.front().horizon;
  const int grid = samples.empty() ? 0 : samples.front().obs.grid_size;
  const std::size_t rec = record_floats(tau, horizon, grid);

  std::string body;
  body.reserve(samples.size() * rec * 4);
  for (const Sample& s : samples) {
    if (s.tau != tau || s.horizon != horizon || s.obs.grid_size != grid ||
        s.past.size() != static_cast<std::size_t>(tau + 1) * 2 ||
        s.future.size() != static_cast<std::size_t>(horizon) * 2 ||
        s.obs.visual_features.size() != static_cast<std::size_t>(grid) * grid * sim::kChannels)
      throw DatasetError(Kind::malformed, "write_dataset: samples disagree on shape");
    for (double v : s.past) put_f32(body, static_cast<float>(v));
    for (float v : s.obs.visual_features) put_f32(body, v);
    put_f32(body, static_cast<float>(s.obs.velocity));
    put_f32(body, s.obs.is_at_traffic_light ? 1.0F : 0.0F);
    put_f32(body, static_cast<float>(static_cast<int>(s.obs.traffic_light_state)));
    for (double v : s.future) put_f32(body, static_cast<float>(v));
  }

  std::ostringstream head;
  head << "rig-dataset\n"
       << "version " << kDatasetVersion << "\n"
       << "count " << samples.size() << "\n"
       << "tau " << tau << "\n"
       << "horizon " << horizon << "\n"
       << "grid " << grid << "\n"
       << "channels " << sim::kChannels << "\n"
       << "seed " << seed << "\n"
       << "crc32 " << crc_of(body) << "\n"
       << "end\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(Kind::io, "cannot open " + path.string() + " for writing");
  const std::string h = head.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw DatasetError(Kind::io, "failed writing " + path.string());
}

std::vector<Sample> read_dataset(const std::filesystem::path& path, DatasetHeader* header_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(Kind::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DatasetError(Kind::truncated, path.string() + ": empty file");
  if (line != "rig-dataset") throw DatasetError(Kind::malformed, path.string() + ": not a dataset file");

  DatasetHeader h;
  bool saw_version = false, saw_end = false;
  int channels = -1;
  while (std::getline(in, line)) {
    if (line == "end") {
      saw_end = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    bool ok = true;
    if (key == "version") {
      ok = static_cast<bool>(ls >> h.version);
      saw_version = ok;
    } else if (key == "count") ok = static_cast<bool>(ls >> h.count);
    else if (key == "tau") ok = static_cast<bool>(ls >> h.tau);
    else if (key == "horizon") ok = static_cast<bool>(ls >> h.horizon);
    else if (key == "grid") ok = static_cast<bool>(ls >> h.grid_size);
    else if (key == "channels") ok = static_cast<bool>(ls >> channels);
    else if (key == "seed") ok = static_cast<bool>(ls >> h.seed);
    else if (key == "crc32") ok = static_cast<bool>(ls >> h.crc32);
    else throw DatasetError(Kind::malformed, path.string() + ": unknown header key '" + key + "'");
    if (!ok) throw DatasetError(Kind::malformed, path.string() + ": bad value for '" + key + "'");
  }
  if (!saw_end) throw DatasetError(Kind::truncated, path.string() + ": header ends early");
  if (!saw_version) throw DatasetError(Kind::malformed, path.string() + ": header lacks a version");
  if (h.version != kDatasetVersion)
    throw DatasetError(Kind::version, path.string() + ": version " + std::to_string(h.version) + ", expected " +
                                          std::to_string(kDatasetVersion));
  if (h.tau < 0 || h.horizon < 0 || h.grid_size < 0 || (h.count > 0 && channels != sim::kChannels))
    throw DatasetError(Kind::malformed, path.string() + ": invalid shape in header");

  const std::size_t rec = record_floats(h.tau, h.horizon, h.grid_size);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expect = h.count * rec * 4;
  if (body.size() < expect)
    throw DatasetError(Kind::truncated, path.string() + ": truncated, " + std::to_string(body.size()) + " of " +
                                            std::to_string(expect) + " record bytes");
  if (body.size() > expect) throw DatasetError(Kind::malformed, path.string() + ": trailing bytes after records");
  if (crc_of(body) != h.crc32) throw DatasetError(Kind::checksum, path.string() + ": checksum mismatch");

  std::vector<Sample> out(h.count);
  const auto* p = reinterpret_cast<const unsigned char*>(body.data());
  const std::size_t cells = static_cast<std::size_t>(h.grid_size) * h.grid_size * sim::kChannels;
  for (Sample& s : out) {
    s.tau = h.tau;
    s.horizon = h.horizon;
    s.past.resize(static_cast<std::size_t>(h.tau + 1) * 2);
    for (double& v : s.past) v = get_f32(p), p += 4;
    s.obs.grid_size = h.grid_size;
    s.obs.visual_features.resize(cells);
    for (float& v : s.obs.visual_features) v = get_f32(p), p += 4;
    s.obs.velocity = get_f32(p);
    s.obs.is_at_traffic_light = get_f32(p + 4) != 0.0F;
    const int light = static_cast<int>(get_f32(p + 8));
    if (light < 0 || light > 3) throw DatasetError(Kind::malformed, path.string() + ": bad light state");
    s.obs.traffic_light_state = static_cast<sim::LightState>(light);
    p += 12;
    s.future.resize(static_cast<std::size_t>(h.horizon) * 2);
    for (double& v : s.future) v = get_f32(p), p += 4;
  }
  if (header_out) *header_out = h;
  return out;
}

}  // namespace rig::data
