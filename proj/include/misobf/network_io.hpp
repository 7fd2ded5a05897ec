#pragma once

// JSON network files:
//   {"m": 3, "t": [5,5,5], "P": [1,1.5,2], "H": [M_1, ..., M_m]}
// M_j is a t_j x m matrix stored as nested rows; column i of M_j is h_ji.

#include "misobf/channel_model.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>

namespace misobf {

inline MisoNetwork network_from_json(const nlohmann::json& doc) {
  MisoNetwork net;
  try {
    const auto m = doc.at("m").get<std::size_t>();
    net.t = doc.at("t").get<std::vector<int>>();
    net.P = doc.at("P").get<std::vector<double>>();
    const auto& H = doc.at("H");
    if (net.t.size() != m) throw Error("network file: t has " + std::to_string(net.t.size()) + " entries, m = " + std::to_string(m));
    if (!H.is_array() || H.size() != m) throw Error("network file: H must hold m matrices");
    net.h.assign(m, std::vector<Vector>(m));
    for (std::size_t j = 0; j < m; ++j) {
      const auto& M = H[j];
      if (!M.is_array() || M.size() != static_cast<std::size_t>(net.t[j]))
        throw Error("network file: M_" + std::to_string(j + 1) + " must have t_" + std::to_string(j + 1) + " rows");
      for (std::size_t i = 0; i < m; ++i) net.h[j][i] = Vector::Zero(net.t[j]);
      for (std::size_t r = 0; r < M.size(); ++r) {
        const auto row = M[r].get<std::vector<double>>();
        if (row.size() != m) throw Error("network file: M_" + std::to_string(j + 1) + " row " + std::to_string(r + 1) + " must have m columns");
        for (std::size_t i = 0; i < m; ++i) net.h[j][i](static_cast<Eigen::Index>(r)) = row[i];
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("network file: ") + e.what());
  }
  require_valid(net);
  return net;
}

inline nlohmann::json network_to_json(const MisoNetwork& net) {
  nlohmann::json H = nlohmann::json::array();
  const auto m = net.users();
  for (std::size_t j = 0; j < m; ++j) {
    nlohmann::json M = nlohmann::json::array();
    for (int r = 0; r < net.t[j]; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t i = 0; i < m; ++i) row.push_back(net.h[j][i](r));
      M.push_back(std::move(row));
    }
    H.push_back(std::move(M));
  }
  return {{"m", m}, {"t", net.t}, {"P", net.P}, {"H", std::move(H)}};
}

inline MisoNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open network file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error("network file '" + path + "': " + e.what());
  }
  return network_from_json(doc);
}

}  // namespace misobf
