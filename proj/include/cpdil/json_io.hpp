// Copyright 2026 The cpdil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CPDIL_JSON_IO_HPP
#define CPDIL_JSON_IO_HPP

// JSON encoding used by the command-line tool:
//   complex  [re, im] (a bare number is read as a real scalar)
//   matrix   array of rows
//   channel  {"dim": n, "kraus": [matrix, ...]} or {"dim": n, "choi": matrix}
//   pair     {"theta": channel, "phi": channel, "certificate": matrix?}
//   diagonal {"P": real matrix, "Q": real matrix?}

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpdil/chan.hpp"

namespace cpdil::io {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline Complex parse_complex(const Json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw InvalidInput("field '" + path + "': expected [re, im] or a number");
}

inline Matrix parse_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty())
    throw InvalidInput("field '" + path + "': expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].empty())
      throw InvalidInput("field '" + rp + "': expected a non-empty row");
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols)
      throw InvalidInput("field '" + rp + "': row has " + std::to_string(j[r].size()) +
                         " entries, expected " + std::to_string(cols));
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_complex(
          j[r][c], path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  if (!m.allFinite()) throw InvalidInput("field '" + path + "': non-finite entries");
  return m;
}

inline RealMatrix parse_real_matrix(const Json& j, const std::string& path) {
  const Matrix m = parse_matrix(j, path);
  if (m.imag().cwiseAbs().maxCoeff() != 0.0)
    throw InvalidInput("field '" + path + "': expected real entries");
  return m.real();
}

inline const Json& require_field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw InvalidInput("field '" + path + "': expected an object");
  if (!j.contains(key)) throw InvalidInput("field '" + path + "': missing key \"" + key + "\"");
  return j.at(key);
}

struct ChannelInput {
  Eigen::Index dim = 0;
  std::optional<KrausFamily> kraus;
  std::optional<ChoiMatrix> choi;

  // Choi input is converted here, so a non-CP Choi matrix throws
  // NotCompletelyPositive.
  CPMap map(double tol) const {
    if (kraus) return CPMap(*kraus);
    return CPMap::from_choi(*choi, tol);
  }
};

inline ChannelInput parse_channel(const Json& j, const std::string& path) {
  const Json& dim = require_field(j, "dim", path);
  if (!dim.is_number_integer() || dim.get<long long>() <= 0)
    throw InvalidInput("field '" + path + ".dim': expected a positive integer");
  ChannelInput out;
  out.dim = static_cast<Eigen::Index>(dim.get<long long>());
  const bool has_kraus = j.contains("kraus"), has_choi = j.contains("choi");
  if (has_kraus == has_choi)
    throw InvalidInput("field '" + path + "': expected exactly one of \"kraus\" or \"choi\"");
  if (has_kraus) {
    const Json& ks = j.at("kraus");
    if (!ks.is_array() || ks.empty())
      throw InvalidInput("field '" + path + ".kraus': expected a non-empty array of matrices");
    std::vector<Matrix> ops;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const std::string kp = path + ".kraus[" + std::to_string(i) + "]";
      Matrix t = parse_matrix(ks[i], kp);
      if (t.rows() != out.dim || t.cols() != out.dim)
        throw InvalidInput("field '" + kp + "': shape " + shape_str(t.rows(), t.cols()) +
                           " does not match dim " + std::to_string(out.dim));
      ops.push_back(std::move(t));
    }
    out.kraus = KrausFamily(std::move(ops));
  } else {
    Matrix c = parse_matrix(j.at("choi"), path + ".choi");
    const Eigen::Index n2 = out.dim * out.dim;
    if (c.rows() != n2 || c.cols() != n2)
      throw InvalidInput("field '" + path + ".choi': shape " + shape_str(c.rows(), c.cols()) +
                         " does not match dim^2 = " + std::to_string(n2));
    out.choi = ChoiMatrix{out.dim, std::move(c)};
  }
  return out;
}

// Reads and parses a file; syntax errors carry line and column.
inline Json load_json(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + file);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InvalidInput(file + ":" + std::to_string(line) + ":" + std::to_string(col) +
                       ": malformed JSON");
  }
}

inline OrderedJson complex_to_json(Complex z) { return OrderedJson::array({z.real(), z.imag()}); }

inline OrderedJson matrix_to_json(const Matrix& m) {
  OrderedJson rows = OrderedJson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    OrderedJson row = OrderedJson::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline OrderedJson real_matrix_to_json(const RealMatrix& m) {
  OrderedJson rows = OrderedJson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    OrderedJson row = OrderedJson::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline OrderedJson channel_to_json(const KrausFamily& k) {
  OrderedJson ops = OrderedJson::array();
  for (const auto& t : k.ops()) ops.push_back(matrix_to_json(t));
  return OrderedJson{{"dim", k.dim()}, {"kraus", std::move(ops)}};
}

}  // namespace cpdil::io

#endif  // CPDIL_JSON_IO_HPP
