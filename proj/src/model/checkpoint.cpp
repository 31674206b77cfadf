#include "rig/model/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rig::model {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint32_t crc_of(const std::vector<double>& a, std::uint32_t crc) {
  return static_cast<std::uint32_t>(
      ::crc32(crc, reinterpret_cast<const Bytef*>(a.data()), static_cast<uInt>(a.size() * sizeof(double))));
}

void read_array(std::istream& in, std::vector<double>& a, std::size_t n, const char* what) {
  a.resize(n);
  in.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double))
    throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
}

}  // namespace

void write_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const Registry reg(ck.model);
  if (ck.params.size() != reg.total())
    throw std::invalid_argument("checkpoint params do not match the model registry");
  if (ck.config_digest.find('\n') != std::string::npos)
    throw std::invalid_argument("config digest must be a single line");

  std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, Z_NULL, 0));
  crc = crc_of(ck.params, crc);
  crc = crc_of(ck.optimizer.m, crc);
  crc = crc_of(ck.optimizer.v, crc);

  std::ostringstream h;
  const ModelConfig& c = ck.model;
  h << "rig-checkpoint " << kCheckpointVersion << "\n"
    << "model " << c.tau << ' ' << c.horizon << ' ' << c.grid_size << ' ' << c.encoder_dim << ' ' << c.merger_dim
    << ' ' << c.hidden_dim << ' ' << fmt17(c.sigma_min) << "\n";
  for (const ParamBlock& b : reg.blocks()) h << "block " << b.name << ' ' << b.rows << ' ' << b.cols << "\n";
  h << "params " << ck.params.size() << "\n"
    << "optimizer " << ck.optimizer.kind << ' ' << ck.optimizer.step << ' ' << ck.optimizer.m.size() << ' '
    << ck.optimizer.v.size() << "\n"
    << "epoch " << ck.epoch << "\n"
    << "global_step " << ck.global_step << "\n"
    << "digest " << ck.config_digest << "\n"
    << "crc32 " << crc << "\n"
    << "end\n";

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    const std::string head = h.str();
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto* a : {&ck.params, &ck.optimizer.m, &ck.optimizer.v})
      out.write(reinterpret_cast<const char*>(a->data()), static_cast<std::streamsize>(a->size() * sizeof(double)));
    out.flush();
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw CheckpointError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
  }
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  Checkpoint ck;
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError("empty checkpoint file");
  {
    std::istringstream ls(line);
    std::string magic;
    int version = 0;
    if (!(ls >> magic >> version) || magic != "rig-checkpoint")
      throw CheckpointError("not a checkpoint file: " + path.string());
    if (version != kCheckpointVersion)
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  std::vector<std::tuple<std::string, std::size_t, std::size_t>> blocks;
  std::size_t n_params = 0, n_m = 0, n_v = 0;
  std::uint32_t crc_expect = 0;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    bool ok = true;
    if (key == "model") {
      ModelConfig& c = ck.model;
      ok = static_cast<bool>(ls >> c.tau >> c.horizon >> c.grid_size >> c.encoder_dim >> c.merger_dim >>
                             c.hidden_dim >> c.sigma_min);
    } else if (key == "block") {
      std::string name;
      std::size_t r = 0, cols = 0;
      ok = static_cast<bool>(ls >> name >> r >> cols);
      blocks.emplace_back(name, r, cols);
    } else if (key == "params") {
      ok = static_cast<bool>(ls >> n_params);
    } else if (key == "optimizer") {
      ok = static_cast<bool>(ls >> ck.optimizer.kind >> ck.optimizer.step >> n_m >> n_v);
    } else if (key == "epoch") {
      ok = static_cast<bool>(ls >> ck.epoch);
    } else if (key == "global_step") {
      ok = static_cast<bool>(ls >> ck.global_step);
    } else if (key == "digest") {
      ck.config_digest = line.size() > 7 ? line.substr(7) : "";
    } else if (key == "crc32") {
      ok = static_cast<bool>(ls >> crc_expect);
    } else {
      throw CheckpointError("unknown checkpoint header key '" + key + "'");
    }
    if (!ok) throw CheckpointError("malformed checkpoint header line: " + line);
  }
  if (!ended) throw CheckpointError("checkpoint header has no end marker");

  Registry reg(ck.model);
  const auto expect = reg.blocks();
  if (blocks.size() != expect.size()) throw CheckpointError("checkpoint block registry does not match its config");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& [name, r, cols] = blocks[i];
    if (name != expect[i].name || r != expect[i].rows || cols != expect[i].cols)
      throw CheckpointError("checkpoint block " + name + " does not match its config");
  }
  if (n_params != reg.total()) throw CheckpointError("checkpoint parameter count does not match its config");

  read_array(in, ck.params, n_params, "params");
  read_array(in, ck.optimizer.m, n_m, "optimizer moments");
  read_array(in, ck.optimizer.v, n_v, "optimizer moments");
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after checkpoint payload");

  std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, Z_NULL, 0));
  crc = crc_of(ck.params, crc);
  crc = crc_of(ck.optimizer.m, crc);
  crc = crc_of(ck.optimizer.v, crc);
  if (crc != crc_expect) throw CheckpointError("checkpoint checksum mismatch");
  return ck;
}

}  // namespace rig::model
