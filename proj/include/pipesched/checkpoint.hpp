#pragma once

// JSON checkpoint container for PolicyParams.
//
//   {"format": "pipesched-policy", "version": 1,
//    "config": {"hidden_dim": d, "max_degree": D},
//    "tensors": [{"name": ..., "rows": r, "cols": c, "data": [column-major]}]}

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "pipesched/error.hpp"
#include "pipesched/policy.hpp"

namespace pipesched::nn {

inline constexpr const char* kCheckpointFormat = "pipesched-policy";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json params_to_json(const PolicyParams& p) {
  nlohmann::json tensors = nlohmann::json::array();
  p.for_each([&](const char* name, const Mat& m) {
    std::vector<double> data(m.data(), m.data() + m.size());
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}});
  });
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config", {{"hidden_dim", p.config.hidden_dim}, {"max_degree", p.config.max_degree}}},
          {"tensors", std::move(tensors)}};
}

/// Rejects unknown formats, versions, missing tensors and any shape that
/// disagrees with the stored config.
inline PolicyParams params_from_json(const nlohmann::json& j, const std::string& origin = "<json>") {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw ParseError(origin + ": not a policy checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ParseError(origin + ": unsupported checkpoint version " + j.at("version").dump());
    PolicyConfig cfg{j.at("config").at("hidden_dim").get<int>(), j.at("config").at("max_degree").get<int>()};
    PolicyParams p = init_params(cfg, 0);
    const auto& tensors = j.at("tensors");
    std::size_t k = 0;
    p.for_each([&](const char* name, Mat& m) {
      const auto it = std::find_if(tensors.begin(), tensors.end(),
                                   [&](const nlohmann::json& t) { return t.at("name") == name; });
      if (it == tensors.end()) throw ShapeError(origin + ": tensor '" + name + "' is missing");
      const auto rows = it->at("rows").get<Eigen::Index>(), cols = it->at("cols").get<Eigen::Index>();
      const auto data = it->at("data").get<std::vector<double>>();
      if (rows != m.rows() || cols != m.cols() || static_cast<Eigen::Index>(data.size()) != m.size())
        throw ShapeError(origin + ": tensor '" + name + "' is " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", expected " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
      m = Eigen::Map<const Mat>(data.data(), rows, cols);
      ++k;
    });
    if (k != tensors.size()) throw ShapeError(origin + ": checkpoint has unexpected extra tensors");
    if (!p.all_finite()) throw NumericalError(origin + ": checkpoint holds non-finite values");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

inline void save_params(const PolicyParams& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << params_to_json(p).dump() << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

inline PolicyParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return params_from_json(j, path.string());
}

}  // namespace pipesched::nn
