#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fragmig/common.hpp"
#include "fragmig/mhgat.hpp"
#include "fragmig/state.hpp"

namespace fragmig {

/// One overload event: model inputs plus the per-destination oracle labels.
struct DatasetRecord {
  Matrix node_features;  // N x 4
  Matrix edge_features;  // 2E x 2
  std::vector<double> labels;
  std::string topology;  // fingerprint hex
  std::uint64_t run_seed = 0;
  int slot = 0;
  VnfRef vnf;
  NodeId source = 0;

  /// Hash of the input tensors; records with equal hashes are duplicates.
  std::uint64_t tensor_hash() const {
    Fnv1a h;
    h.update_value(node_features.rows);
    h.update_value(node_features.cols);
    for (double x : node_features.data) h.update_value(x);
    h.update_value(edge_features.rows);
    h.update_value(edge_features.cols);
    for (double x : edge_features.data) h.update_value(x);
    return h.digest();
  }
};

namespace detail {

inline nlohmann::json matrix_rows(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

inline Matrix matrix_from_rows(const nlohmann::json& j, std::size_t want_cols, const char* what) {
  if (!j.is_array() || j.empty()) throw DataError(std::string("dataset: ") + what + " must be a non-empty array");
  Matrix m(j.size(), want_cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    auto row = j[r].get<std::vector<double>>();
    if (row.size() != want_cols) throw DataError(std::string("dataset: ") + what + " row width mismatch");
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace detail

inline nlohmann::json to_json(const DatasetRecord& r) {
  return {{"topology", r.topology}, {"run_seed", r.run_seed}, {"slot", r.slot},    {"sfc", r.vnf.sfc},
          {"vnf", r.vnf.vnf},       {"source", r.source},     {"x", detail::matrix_rows(r.node_features)},
          {"e", detail::matrix_rows(r.edge_features)},        {"y", r.labels}};
}

inline DatasetRecord record_from_json(const nlohmann::json& j) {
  try {
    DatasetRecord r;
    r.topology = j.at("topology").get<std::string>();
    r.run_seed = j.at("run_seed").get<std::uint64_t>();
    r.slot = j.at("slot").get<int>();
    r.vnf = {j.at("sfc").get<SfcId>(), j.at("vnf").get<std::uint32_t>()};
    r.source = j.at("source").get<NodeId>();
    r.node_features = detail::matrix_from_rows(j.at("x"), kNodeFeatureWidth, "x");
    r.edge_features = detail::matrix_from_rows(j.at("e"), kEdgeFeatureWidth, "e");
    r.labels = j.at("y").get<std::vector<double>>();
    if (r.labels.size() != r.node_features.rows) throw DataError("dataset: label count differs from node count");
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("dataset: malformed record: ") + ex.what());
  }
}

inline void write_jsonl(std::ostream& os, const std::vector<DatasetRecord>& records) {
  for (const auto& r : records) os << to_json(r).dump() << '\n';
}

inline void save_dataset(const std::string& path, const std::vector<DatasetRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write dataset " + path);
  write_jsonl(os, records);
}

inline std::vector<DatasetRecord> read_jsonl(std::istream& is) {
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& ex) {
      throw DataError("dataset line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const DataError& ex) {
      throw DataError("dataset line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

inline std::vector<DatasetRecord> load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read dataset " + path);
  return read_jsonl(is);
}

}  // namespace fragmig
