#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reil/nn/params.hpp"

namespace reil::nn {

enum class Precision { F32, F64 };

inline std::string to_string(Precision p) { return p == Precision::F32 ? "F32" : "F64"; }

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

/// A parameter vector plus the header needed to reject loading it into a
/// different topology.
struct ParamCheckpoint {
  std::string topology_hash;
  std::string topology;
  Precision precision = Precision::F32;
  std::uint64_t seed = 0;
  std::vector<double> values;
};

template <class T>
ParamCheckpoint make_checkpoint(const ParamLayout& layout, const Vector<T>& params, std::uint64_t seed,
                                Precision precision = Precision::F32) {
  if (params.size() != layout.size()) throw Error(ErrorCode::ShapeError, "checkpoint: parameter count mismatch");
  ParamCheckpoint c{hash_hex(layout.hash()), layout.description(), precision, seed, {}};
  c.values.reserve(static_cast<std::size_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double v = static_cast<double>(params[i]);
    c.values.push_back(precision == Precision::F32 ? static_cast<double>(static_cast<float>(v)) : v);
  }
  return c;
}

inline nlohmann::json to_json(const ParamCheckpoint& c) {
  return {{"topology_hash", c.topology_hash},
          {"topology", c.topology},
          {"precision", to_string(c.precision)},
          {"seed", c.seed},
          {"values", c.values}};
}

inline ParamCheckpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    ParamCheckpoint c;
    c.topology_hash = j.at("topology_hash").get<std::string>();
    c.topology = j.value("topology", "");
    const auto p = j.at("precision").get<std::string>();
    if (p != "F32" && p != "F64") throw Error(ErrorCode::ParseError, "checkpoint: bad precision '" + p + "'");
    c.precision = p == "F32" ? Precision::F32 : Precision::F64;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.values = j.at("values").get<std::vector<double>>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
}

/// Restores parameters, refusing a checkpoint written for another topology.
template <class T>
Vector<T> restore(const ParamCheckpoint& c, const ParamLayout& layout) {
  if (c.topology_hash != hash_hex(layout.hash())) {
    throw Error(ErrorCode::TopologyMismatch,
                "checkpoint topology " + c.topology_hash + " does not match " + hash_hex(layout.hash()));
  }
  if (static_cast<Eigen::Index>(c.values.size()) != layout.size()) {
    throw Error(ErrorCode::TopologyMismatch, "checkpoint holds " + std::to_string(c.values.size()) + " values");
  }
  Vector<T> out(layout.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = static_cast<T>(c.values[static_cast<std::size_t>(i)]);
  return out;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  f << j.dump() << '\n';
  if (!f) throw Error(ErrorCode::IoError, "write failed: " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot read " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

template <class T>
void save_params(const std::string& path, const ParamLayout& layout, const Vector<T>& params, std::uint64_t seed,
                 Precision precision = Precision::F32) {
  write_json_file(path, to_json(make_checkpoint(layout, params, seed, precision)));
}

template <class T>
Vector<T> load_params(const std::string& path, const ParamLayout& layout) {
  return restore<T>(checkpoint_from_json(read_json_file(path)), layout);
}

}  // namespace reil::nn
