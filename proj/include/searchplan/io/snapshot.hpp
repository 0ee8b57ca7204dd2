#pragma once

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "searchplan/particles.hpp"

namespace searchplan::io {

/// Particle snapshot CSV: `id,lat,lon,weight,scenario,beacon`. Doubles are
/// written with 17 significant digits so a read-back is bit-exact.
inline void write_snapshot(std::ostream& out, const ParticleSet& ps) {
  out << "id,lat,lon,weight,scenario,beacon\n";
  char buf[160];
  for (const auto& p : ps) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,", static_cast<long long>(p.id), p.position.lat,
                  p.position.lon, p.weight);
    out << buf << p.scenario << ',' << to_string(p.beacon) << '\n';
  }
}

inline std::string snapshot_string(const ParticleSet& ps) {
  std::ostringstream out;
  write_snapshot(out, ps);
  return out.str();
}

inline ParticleSet read_snapshot(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || (line != "id,lat,lon,weight,scenario,beacon" && line != "id,lat,lon,weight,scenario,beacon\r"))
    throw std::invalid_argument("unexpected snapshot header");
  std::vector<Particle> ps;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    while (cols.size() < 6) cols.emplace_back();
    Particle p;
    p.id = std::stoll(cols[0]);
    p.position = {std::stod(cols[1]), std::stod(cols[2])};
    p.weight = std::stod(cols[3]);
    p.scenario = cols[4];
    p.beacon = beacon_state_from_string(cols[5]);
    ps.push_back(std::move(p));
  }
  return ParticleSet(std::move(ps));
}

inline ParticleSet read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open snapshot: " + path);
  return read_snapshot(in);
}

/// Hex SHA-256 of a byte string.
inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

}  // namespace searchplan::io
