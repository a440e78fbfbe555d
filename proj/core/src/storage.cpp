// Copyright 2026 The mskpipe Authors
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

#include "msk/storage.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace msk {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t") == std::string::npos;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Tab-separated split that keeps empty fields (TRC occlusion encoding).
std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& field, const std::string& where) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(where + ": cannot parse number '" + field + "'");
  }
  if (!std::isfinite(value)) {
    throw Error(where + ": non-finite value '" + field + "'");
  }
  return value;
}

long parse_long(const std::string& field, const std::string& where) {
  long value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(where + ": cannot parse integer '" + field + "'");
  }
  return value;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // LF endings everywhere
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

Eigen::Index TimeSeriesTable::column(const std::string& label) const {
  for (size_t i = 0; i < column_labels.size(); ++i) {
    if (column_labels[i] == label) return static_cast<Eigen::Index>(i);
  }
  throw Error("table '" + name + "' has no column '" + label + "'");
}

TimeSeriesTable read_storage(const std::string& path) {
  auto in = open_in(path);
  TimeSeriesTable table;
  std::string line;
  int line_no = 0;
  auto where = [&](int n) { return path + ":" + std::to_string(n); };

  if (!std::getline(in, line)) throw Error(where(1) + ": empty file");
  ++line_no;
  table.name = strip_cr(line);

  long n_rows = -1, n_cols = -1;
  bool saw_end = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line == "endheader") {
      saw_end = true;
      break;
    }
    table.header_lines.push_back(line);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "nRows") {
      n_rows = parse_long(value, where(line_no));
    } else if (key == "nColumns") {
      n_cols = parse_long(value, where(line_no));
    } else if (key == "inDegrees") {
      if (value != "yes" && value != "no") {
        throw Error(where(line_no) + ": inDegrees must be yes or no");
      }
      table.in_degrees = value == "yes";
    } else if (key == "version") {
      if (parse_long(value, where(line_no)) != 1) {
        throw Error(where(line_no) + ": unsupported version '" + value + "'");
      }
    }
  }
  if (!saw_end) throw Error(path + ": missing endheader");
  if (n_rows < 0) throw Error(path + ": header is missing nRows");
  if (n_cols < 1) throw Error(path + ": header is missing nColumns");

  if (!std::getline(in, line)) throw Error(path + ": missing column label row");
  ++line_no;
  table.column_labels = split_ws(strip_cr(line));
  if (static_cast<long>(table.column_labels.size()) != n_cols) {
    throw Error(where(line_no) + ": " +
                std::to_string(table.column_labels.size()) +
                " labels but nColumns=" + std::to_string(n_cols));
  }
  if (table.column_labels.front() != "time") {
    throw Error(where(line_no) + ": first column must be 'time', got '" +
                table.column_labels.front() + "'");
  }

  table.rows.resize(n_rows, n_cols);
  long row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (is_blank(line)) continue;
    if (row >= n_rows) {
      throw Error(where(line_no) + ": more data rows than nRows=" +
                  std::to_string(n_rows));
    }
    const auto fields = split_ws(line);
    if (static_cast<long>(fields.size()) != n_cols) {
      throw Error(where(line_no) + ": expected " + std::to_string(n_cols) +
                  " fields, got " + std::to_string(fields.size()));
    }
    for (long c = 0; c < n_cols; ++c) {
      table.rows(row, c) = parse_double(fields[c], where(line_no));
    }
    ++row;
  }
  if (row != n_rows) {
    throw Error(path + ": nRows=" + std::to_string(n_rows) + " but found " +
                std::to_string(row) + " data rows");
  }
  for (long t = 1; t < n_rows; ++t) {
    if (!(table.rows(t, 0) > table.rows(t - 1, 0))) {
      throw Error(path + ": time column not strictly increasing at row " +
                  std::to_string(t));
    }
  }
  return table;
}

void write_storage(const TimeSeriesTable& table, const std::string& path) {
  if (table.column_labels.size() != static_cast<size_t>(table.rows.cols())) {
    throw Error("table '" + table.name + "' label/column count mismatch");
  }
  auto out = open_out(path);
  out << table.name << "\n";
  if (table.header_lines.empty()) {
    out << "version=1\n";
    out << "nRows=" << table.rows.rows() << "\n";
    out << "nColumns=" << table.rows.cols() << "\n";
    out << "inDegrees=" << (table.in_degrees ? "yes" : "no") << "\n";
  } else {
    for (const auto& line : table.header_lines) {
      if (line.rfind("nRows=", 0) == 0) {
        out << "nRows=" << table.rows.rows() << "\n";
      } else if (line.rfind("nColumns=", 0) == 0) {
        out << "nColumns=" << table.rows.cols() << "\n";
      } else if (line.rfind("inDegrees=", 0) == 0) {
        out << "inDegrees=" << (table.in_degrees ? "yes" : "no") << "\n";
      } else {
        out << line << "\n";
      }
    }
  }
  out << "endheader\n";
  for (size_t i = 0; i < table.column_labels.size(); ++i) {
    out << (i ? "\t" : "") << table.column_labels[i];
  }
  out << "\n";
  for (Eigen::Index t = 0; t < table.rows.rows(); ++t) {
    for (Eigen::Index c = 0; c < table.rows.cols(); ++c) {
      out << (c ? "\t" : "") << format_double(table.rows(t, c));
    }
    out << "\n";
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

TimeSeriesTable make_table(const std::string& name, const VecX& times,
                           const std::vector<std::string>& labels,
                           const MatX& values) {
  if (values.rows() != times.size()) {
    throw Error("make_table: row count does not match times");
  }
  if (static_cast<Eigen::Index>(labels.size()) != values.cols()) {
    throw Error("make_table: label count does not match value columns");
  }
  TimeSeriesTable table;
  table.name = name;
  table.column_labels.push_back("time");
  table.column_labels.insert(table.column_labels.end(), labels.begin(),
                             labels.end());
  table.rows.resize(times.size(), values.cols() + 1);
  table.rows.col(0) = times;
  table.rows.rightCols(values.cols()) = values;
  return table;
}

void write_long_format(const TimeSeriesTable& table, const std::string& path) {
  auto out = open_out(path);
  out << "time\tchannel\tvalue\n";
  for (Eigen::Index t = 0; t < table.rows.rows(); ++t) {
    for (Eigen::Index c = 1; c < table.rows.cols(); ++c) {
      out << format_double(table.rows(t, 0)) << "\t" << table.column_labels[c]
          << "\t" << format_double(table.rows(t, c)) << "\n";
    }
  }
}

MarkerTrajectory read_trc(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  int line_no = 0;
  auto where = [&](int n) { return path + ":" + std::to_string(n); };
  auto next_line = [&]() {
    if (!std::getline(in, line)) {
      throw Error(path + ": unexpected end of file at line " +
                  std::to_string(line_no + 1));
    }
    ++line_no;
    line = strip_cr(line);
  };

  next_line();  // PathFileType 4 (X/Y/Z) <name>
  if (line.rfind("PathFileType", 0) != 0) {
    throw Error(where(line_no) + ": expected PathFileType header");
  }
  next_line();  // DataRate CameraRate NumFrames NumMarkers Units ...
  next_line();  // their values
  const auto meta = split_ws(line);
  if (meta.size() < 5) {
    throw Error(where(line_no) + ": expected at least 5 metadata fields");
  }
  const long num_frames = parse_long(meta[2], where(line_no));
  const long num_markers = parse_long(meta[3], where(line_no));
  const std::string units = meta[4];
  double to_meters = 1.0;
  if (units == "mm") {
    to_meters = 1e-3;
  } else if (units != "m") {
    throw Error(where(line_no) + ": unsupported units '" + units +
                "' (expected m or mm)");
  }

  next_line();  // Frame# Time <marker names>
  MarkerTrajectory markers;
  {
    const auto names = split_ws(line);
    if (names.size() < 2 || names[0] != "Frame#") {
      throw Error(where(line_no) + ": expected marker name row");
    }
    markers.names.assign(names.begin() + 2, names.end());
  }
  if (static_cast<long>(markers.names.size()) != num_markers) {
    throw Error(where(line_no) + ": " + std::to_string(markers.names.size()) +
                " marker names but NumMarkers=" + std::to_string(num_markers));
  }
  next_line();  // X1 Y1 Z1 ... coordinate suffix row (ignored)

  markers.times.resize(num_frames);
  markers.positions.assign(num_frames, MatX::Zero(num_markers, 3));
  markers.validity = ArrXb::Constant(num_frames, num_markers, false);

  long row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (is_blank(line)) continue;
    if (row >= num_frames) {
      throw Error(where(line_no) + ": more frames than NumFrames=" +
                  std::to_string(num_frames));
    }
    const auto fields = split_tabs(line);
    if (static_cast<long>(fields.size()) < 2 + 3 * num_markers) {
      throw Error(where(line_no) + ": expected " +
                  std::to_string(2 + 3 * num_markers) + " fields, got " +
                  std::to_string(fields.size()));
    }
    markers.times[row] = parse_double(fields[1], where(line_no));
    for (long k = 0; k < num_markers; ++k) {
      const std::string& fx = fields[2 + 3 * k];
      const std::string& fy = fields[3 + 3 * k];
      const std::string& fz = fields[4 + 3 * k];
      if (is_blank(fx) || is_blank(fy) || is_blank(fz)) continue;  // occluded
      markers.positions[row](k, 0) = to_meters * parse_double(fx, where(line_no));
      markers.positions[row](k, 1) = to_meters * parse_double(fy, where(line_no));
      markers.positions[row](k, 2) = to_meters * parse_double(fz, where(line_no));
      markers.validity(row, k) = true;
    }
    ++row;
  }
  if (row != num_frames) {
    throw Error(path + ": NumFrames=" + std::to_string(num_frames) +
                " but found " + std::to_string(row) + " data rows");
  }
  return markers;
}

void write_trc(const MarkerTrajectory& markers, const std::string& path) {
  const long frames = markers.times.size();
  const long n_m = static_cast<long>(markers.names.size());
  double rate = 0.0;
  if (frames >= 2) {
    rate = static_cast<double>(frames - 1) /
           (markers.times[frames - 1] - markers.times[0]);
  }
  auto out = open_out(path);
  out << "PathFileType\t4\t(X/Y/Z)\t" << path << "\n";
  out << "DataRate\tCameraRate\tNumFrames\tNumMarkers\tUnits\tOrigDataRate\t"
         "OrigDataStartFrame\tOrigNumFrames\n";
  out << format_double(rate) << "\t" << format_double(rate) << "\t" << frames
      << "\t" << n_m << "\tm\t" << format_double(rate) << "\t1\t" << frames
      << "\n";
  out << "Frame#\tTime";
  for (const auto& name : markers.names) out << "\t" << name << "\t\t";
  out << "\n";
  out << "\t";
  for (long k = 0; k < n_m; ++k) {
    out << "\tX" << (k + 1) << "\tY" << (k + 1) << "\tZ" << (k + 1);
  }
  out << "\n\n";
  for (long t = 0; t < frames; ++t) {
    out << (t + 1) << "\t" << format_double(markers.times[t]);
    for (long k = 0; k < n_m; ++k) {
      if (markers.validity(t, k)) {
        out << "\t" << format_double(markers.positions[t](k, 0)) << "\t"
            << format_double(markers.positions[t](k, 1)) << "\t"
            << format_double(markers.positions[t](k, 2));
      } else {
        out << "\t\t\t";
      }
    }
    out << "\n";
  }
}

namespace {

void expect_keys(const ordered_json& obj, const std::string& where,
                 const std::vector<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(where + ": unknown key '" + key + "'");
    }
  }
}

double get_number(const ordered_json& obj, const std::string& where,
                  const std::string& key) {
  if (!obj.contains(key)) throw Error(where + ": missing key '" + key + "'");
  if (!obj[key].is_number()) throw Error(where + "." + key + ": expected number");
  return obj[key].get<double>();
}

double get_number_or(const ordered_json& obj, const std::string& where,
                     const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw Error(where + "." + key + ": expected number");
  return obj[key].get<double>();
}

std::string get_string(const ordered_json& obj, const std::string& where,
                       const std::string& key) {
  if (!obj.contains(key)) throw Error(where + ": missing key '" + key + "'");
  if (!obj[key].is_string()) throw Error(where + "." + key + ": expected string");
  return obj[key].get<std::string>();
}

Vec3 get_vec3(const ordered_json& obj, const std::string& where,
              const std::string& key) {
  if (!obj.contains(key)) throw Error(where + ": missing key '" + key + "'");
  const auto& arr = obj[key];
  if (!arr.is_array() || arr.size() != 3) {
    throw Error(where + "." + key + ": expected an array of 3 numbers");
  }
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!arr[i].is_number()) {
      throw Error(where + "." + key + "[" + std::to_string(i) +
                  "]: expected number");
    }
    v[i] = arr[i].get<double>();
  }
  return v;
}

Mat3 get_mat3(const ordered_json& obj, const std::string& where,
              const std::string& key) {
  if (!obj.contains(key)) throw Error(where + ": missing key '" + key + "'");
  const auto& arr = obj[key];
  if (!arr.is_array() || arr.size() != 3) {
    throw Error(where + "." + key + ": expected a 3x3 array");
  }
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    if (!arr[r].is_array() || arr[r].size() != 3) {
      throw Error(where + "." + key + "[" + std::to_string(r) +
                  "]: expected an array of 3 numbers");
    }
    for (int c = 0; c < 3; ++c) m(r, c) = arr[r][c].get<double>();
  }
  return m;
}

ordered_json vec3_json(const Vec3& v) {
  return ordered_json::array({v[0], v[1], v[2]});
}

ordered_json mat3_json(const Mat3& m) {
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < 3; ++r) {
    rows.push_back(ordered_json::array({m(r, 0), m(r, 1), m(r, 2)}));
  }
  return rows;
}

}  // namespace

Model read_model(const std::string& path) {
  auto in = open_in(path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(path + ": expected a JSON object");
  expect_keys(doc, path,
              {"format_version", "bodies", "muscles", "markers", "gravity",
               "reserve_optimal_force", "reference_pose"});
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer() ||
      doc["format_version"].get<long>() != 1) {
    throw Error(path + ": format_version must be the integer 1");
  }
  if (!doc.contains("bodies") || !doc["bodies"].is_array()) {
    throw Error(path + ": missing 'bodies' array");
  }

  Model model;
  for (size_t i = 0; i < doc["bodies"].size(); ++i) {
    const auto& jb = doc["bodies"][i];
    const std::string where = path + ":bodies[" + std::to_string(i) + "]";
    if (!jb.is_object()) throw Error(where + ": expected object");
    expect_keys(jb, where,
                {"name", "parent", "joint_type", "joint_axis",
                 "offset_in_parent", "mass", "com_local", "inertia_local"});
    BodySegment b;
    b.name = get_string(jb, where, "name");
    if (jb.contains("parent") && !jb["parent"].is_null()) {
      if (!jb["parent"].is_string()) throw Error(where + ".parent: expected string");
      b.parent = jb["parent"].get<std::string>();
    }
    try {
      b.joint_type = joint_type_from_string(get_string(jb, where, "joint_type"));
    } catch (const Error& e) {
      throw Error(where + ".joint_type: " + e.what());
    }
    b.joint_axis = get_vec3(jb, where, "joint_axis");
    b.offset_in_parent = get_vec3(jb, where, "offset_in_parent");
    b.mass = get_number(jb, where, "mass");
    b.com_local = get_vec3(jb, where, "com_local");
    b.inertia_local = get_mat3(jb, where, "inertia_local");
    model.bodies.push_back(std::move(b));
  }

  if (doc.contains("muscles")) {
    if (!doc["muscles"].is_array()) throw Error(path + ".muscles: expected array");
    for (size_t i = 0; i < doc["muscles"].size(); ++i) {
      const auto& jm = doc["muscles"][i];
      const std::string where = path + ":muscles[" + std::to_string(i) + "]";
      if (!jm.is_object()) throw Error(where + ": expected object");
      expect_keys(jm, where,
                  {"name", "f_max", "l_opt", "v_max", "path", "fl_width",
                   "fv_shape"});
      HillMuscleParams m;
      m.name = get_string(jm, where, "name");
      m.f_max = get_number(jm, where, "f_max");
      m.l_opt = get_number(jm, where, "l_opt");
      m.v_max = get_number(jm, where, "v_max");
      m.fl_width = get_number_or(jm, where, "fl_width", m.fl_width);
      m.fv_shape = get_number_or(jm, where, "fv_shape", m.fv_shape);
      if (!jm.contains("path") || !jm["path"].is_array()) {
        throw Error(where + ": missing 'path' array");
      }
      for (size_t k = 0; k < jm["path"].size(); ++k) {
        const auto& jp = jm["path"][k];
        const std::string pw = where + ".path[" + std::to_string(k) + "]";
        if (!jp.is_object()) throw Error(pw + ": expected object");
        expect_keys(jp, pw, {"body", "point"});
        PathPoint pp;
        pp.body = get_string(jp, pw, "body");
        pp.point = get_vec3(jp, pw, "point");
        m.path.push_back(std::move(pp));
      }
      model.muscles.push_back(std::move(m));
    }
  }

  if (doc.contains("markers")) {
    if (!doc["markers"].is_array()) throw Error(path + ".markers: expected array");
    for (size_t i = 0; i < doc["markers"].size(); ++i) {
      const auto& jk = doc["markers"][i];
      const std::string where = path + ":markers[" + std::to_string(i) + "]";
      if (!jk.is_object()) throw Error(where + ": expected object");
      expect_keys(jk, where, {"name", "body", "local_offset", "weight"});
      MarkerDef mk;
      mk.name = get_string(jk, where, "name");
      mk.body = get_string(jk, where, "body");
      mk.local_offset = get_vec3(jk, where, "local_offset");
      mk.weight = get_number_or(jk, where, "weight", 1.0);
      model.markers.push_back(std::move(mk));
    }
  }

  if (doc.contains("gravity")) model.gravity = get_vec3(doc, path, "gravity");
  model.reserve_optimal_force =
      get_number_or(doc, path, "reserve_optimal_force", 1.0);

  if (doc.contains("reference_pose")) {
    const auto& jr = doc["reference_pose"];
    if (!jr.is_array()) throw Error(path + ".reference_pose: expected array");
    model.reference_pose.resize(jr.size());
    for (size_t i = 0; i < jr.size(); ++i) {
      if (!jr[i].is_number()) {
        throw Error(path + ".reference_pose[" + std::to_string(i) +
                    "]: expected number");
      }
      model.reference_pose[i] = jr[i].get<double>();
    }
  } else {
    model.reference_pose = VecX::Zero(dof_count(model));
  }

  const auto violations = validate_model(model);
  if (!violations.empty()) {
    std::ostringstream os;
    os << path << ": model fails validation (" << violations.size()
       << " violations):";
    for (const auto& v : violations) os << "\n  " << v.path << ": " << v.message;
    throw Error(os.str());
  }
  return model;
}

void write_model(const Model& model, const std::string& path) {
  ordered_json doc;
  doc["format_version"] = 1;
  doc["bodies"] = ordered_json::array();
  for (const auto& b : model.bodies) {
    ordered_json jb;
    jb["name"] = b.name;
    if (!b.parent.empty()) jb["parent"] = b.parent;
    jb["joint_type"] = to_string(b.joint_type);
    jb["joint_axis"] = vec3_json(b.joint_axis);
    jb["offset_in_parent"] = vec3_json(b.offset_in_parent);
    jb["mass"] = b.mass;
    jb["com_local"] = vec3_json(b.com_local);
    jb["inertia_local"] = mat3_json(b.inertia_local);
    doc["bodies"].push_back(std::move(jb));
  }
  doc["muscles"] = ordered_json::array();
  for (const auto& m : model.muscles) {
    ordered_json jm;
    jm["name"] = m.name;
    jm["f_max"] = m.f_max;
    jm["l_opt"] = m.l_opt;
    jm["v_max"] = m.v_max;
    jm["path"] = ordered_json::array();
    for (const auto& pp : m.path) {
      ordered_json jp;
      jp["body"] = pp.body;
      jp["point"] = vec3_json(pp.point);
      jm["path"].push_back(std::move(jp));
    }
    jm["fl_width"] = m.fl_width;
    jm["fv_shape"] = m.fv_shape;
    doc["muscles"].push_back(std::move(jm));
  }
  doc["markers"] = ordered_json::array();
  for (const auto& mk : model.markers) {
    ordered_json jk;
    jk["name"] = mk.name;
    jk["body"] = mk.body;
    jk["local_offset"] = vec3_json(mk.local_offset);
    jk["weight"] = mk.weight;
    doc["markers"].push_back(std::move(jk));
  }
  doc["gravity"] = vec3_json(model.gravity);
  doc["reserve_optimal_force"] = model.reserve_optimal_force;
  doc["reference_pose"] = ordered_json::array();
  for (Eigen::Index i = 0; i < model.reference_pose.size(); ++i) {
    doc["reference_pose"].push_back(model.reference_pose[i]);
  }
  auto out = open_out(path);
  out << doc.dump(2) << "\n";
}

GrfTrajectory grf_from_table(
    const TimeSeriesTable& table,
    const std::map<std::string, std::string>& side_to_body) {
  GrfTrajectory grf;
  grf.times = table.times();
  const char axes[3] = {'x', 'y', 'z'};
  for (const std::string side : {"r", "l"}) {
    bool has_force = true;
    for (char ax : axes) {
      bool found = false;
      for (const auto& label : table.column_labels) {
        if (label == side + std::string("_force_v") + ax) found = true;
      }
      has_force = has_force && found;
    }
    if (!has_force) continue;

    GrfSide s;
    s.side = side;
    auto it = side_to_body.find(side);
    if (it == side_to_body.end()) {
      throw Error("GRF table has side '" + side +
                  "' but no applied body is configured for it");
    }
    s.applied_body = it->second;
    const Eigen::Index frames = table.frame_count();
    s.force.resize(frames, 3);
    s.cop.resize(frames, 3);
    s.moment = MatX::Zero(frames, 3);
    for (int a = 0; a < 3; ++a) {
      s.force.col(a) =
          table.rows.col(table.column(side + std::string("_force_v") + axes[a]));
      s.cop.col(a) =
          table.rows.col(table.column(side + std::string("_cop_p") + axes[a]));
      const std::string moment_label =
          side + std::string("_moment_m") + axes[a];
      for (const auto& label : table.column_labels) {
        if (label == moment_label) {
          s.moment.col(a) = table.rows.col(table.column(moment_label));
        }
      }
    }
    grf.sides.push_back(std::move(s));
  }
  if (grf.sides.empty()) {
    throw Error("GRF table declares no <side>_force_v{x,y,z} column triplets");
  }
  return grf;
}

TimeSeriesTable grf_to_table(const GrfTrajectory& grf) {
  std::vector<std::string> labels;
  const Eigen::Index frames = grf.times.size();
  MatX values(frames, static_cast<Eigen::Index>(grf.sides.size()) * 9);
  Eigen::Index col = 0;
  const char axes[3] = {'x', 'y', 'z'};
  for (const auto& side : grf.sides) {
    for (int a = 0; a < 3; ++a) {
      labels.push_back(side.side + "_force_v" + axes[a]);
      values.col(col++) = side.force.col(a);
    }
    for (int a = 0; a < 3; ++a) {
      labels.push_back(side.side + "_cop_p" + axes[a]);
      values.col(col++) = side.cop.col(a);
    }
    for (int a = 0; a < 3; ++a) {
      labels.push_back(side.side + "_moment_m" + axes[a]);
      values.col(col++) = side.moment.col(a);
    }
  }
  return make_table("grf", grf.times, labels, values);
}

KinematicTrajectory trajectory_from_table(const TimeSeriesTable& table,
                                          const Model& model) {
  const auto names = coordinate_names(model);
  if (table.column_labels.size() != names.size() + 1) {
    throw Error("coordinate table has " +
                std::to_string(table.column_labels.size() - 1) +
                " data columns, model has " + std::to_string(names.size()) +
                " coordinates");
  }
  for (size_t i = 0; i < names.size(); ++i) {
    if (table.column_labels[i + 1] != names[i]) {
      throw Error("coordinate column " + std::to_string(i + 1) + " is '" +
                  table.column_labels[i + 1] + "', model expects '" + names[i] +
                  "'");
    }
  }
  KinematicTrajectory traj;
  traj.times = table.times();
  traj.q = table.rows.rightCols(static_cast<Eigen::Index>(names.size()));
  if (table.in_degrees) {
    const auto rot = rotational_dofs(model);
    constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
    for (size_t j = 0; j < rot.size(); ++j) {
      if (rot[j]) traj.q.col(static_cast<Eigen::Index>(j)) *= kDegToRad;
    }
  }
  const Eigen::Index frames = traj.times.size();
  if (frames >= 2) {
    traj.frame_rate = static_cast<double>(frames - 1) /
                      (traj.times[frames - 1] - traj.times[0]);
  }
  if (frames >= 3) {
    std::tie(traj.qdot, traj.qddot) = differentiate(traj.times, traj.q);
  } else {
    traj.qdot = MatX::Zero(frames, traj.q.cols());
    traj.qddot = MatX::Zero(frames, traj.q.cols());
  }
  return traj;
}

TimeSeriesTable trajectory_to_table(const KinematicTrajectory& traj,
                                    const Model& model,
                                    const std::string& name) {
  return make_table(name, traj.times, coordinate_names(model), traj.q);
}

ActivationTrajectory activations_from_table(const TimeSeriesTable& table) {
  ActivationTrajectory act;
  act.times = table.times();
  act.muscle_names.assign(table.column_labels.begin() + 1,
                          table.column_labels.end());
  act.activations = table.rows.rightCols(table.rows.cols() - 1);
  return act;
}

TimeSeriesTable activations_to_table(const ActivationTrajectory& activations,
                                     const std::string& name) {
  return make_table(name, activations.times, activations.muscle_names,
                    activations.activations);
}

}  // namespace msk
