#include "optw/instance_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "optw/error.hpp"

namespace optw {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string file_stem(const std::string& path) {
  const std::size_t slash = path.find_last_of("/\\");
  std::string base = (slash == std::string::npos) ? path : path.substr(slash + 1);
  const std::size_t dot = base.find_last_of('.');
  if (dot != std::string::npos) base = base.substr(0, dot);
  return base;
}

bool parse_numbers(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::istringstream iss(line);
  double v;
  while (iss >> v) out.push_back(v);
  // A row counts as numeric only if the whole line was consumed.
  if (!iss.eof()) {
    std::string tail;
    iss.clear();
    if (iss >> tail) return false;
  }
  return !out.empty();
}

struct RawRow {
  int line = 0;
  std::vector<double> fields;
};

std::vector<RawRow> read_numeric_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  std::vector<RawRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const char c = line[first];
    if (c == '*' || c == '#' || c == '/') continue;
    std::vector<double> fields;
    if (!parse_numbers(line, fields)) {
      raise(ErrorCode::MalformedFile, path + ": non-numeric row", lineno);
    }
    rows.push_back({lineno, std::move(fields)});
  }
  return rows;
}

struct ParsedNode {
  int id = 0;
  Node node;
};

ParsedNode parse_row(const RawRow& row, FileFormat format,
                     const std::string& path) {
  const auto& f = row.fields;
  ParsedNode out;
  if (f.size() < 7) {
    raise(ErrorCode::MalformedFile,
          path + ": node row needs at least 7 fields, got " +
              std::to_string(f.size()),
          row.line);
  }
  out.id = static_cast<int>(f[0]);
  out.node.x = f[1];
  out.node.y = f[2];
  out.node.duration = f[3];
  out.node.score = f[4];
  if (format == FileFormat::CordeauOPTW && f.size() > 7) {
    // Extended layout: id x y d S f a <a ids> O C. Skip the adjacency list
    // the legacy files carry; the windows are the trailing pair.
    const int a = static_cast<int>(f[6]);
    const std::size_t expected = 7 + static_cast<std::size_t>(std::max(a, 0)) + 2;
    if (f.size() != expected) {
      raise(ErrorCode::MalformedFile,
            path + ": extended row length mismatch (a=" + std::to_string(a) +
                ", fields=" + std::to_string(f.size()) + ")",
            row.line);
    }
    out.node.open = f[f.size() - 2];
    out.node.close = f[f.size() - 1];
  } else {
    if (f.size() != 7) {
      raise(ErrorCode::MalformedFile,
            path + ": expected 7 fields, got " + std::to_string(f.size()),
            row.line);
    }
    out.node.open = f[5];
    out.node.close = f[6];
  }
  return out;
}

}  // namespace

FileFormat deduce_format(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    return FileFormat::CanonicalJSON;
  }
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  char c = 0;
  while (in.get(c)) {
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t') continue;
    break;
  }
  if (c == '{') return FileFormat::CanonicalJSON;
  in.seekg(0);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> fields;
    if (!parse_numbers(line, fields)) continue;
    if (fields.size() > 7) return FileFormat::CordeauOPTW;
  }
  return FileFormat::SolomonOPTW;
}

Instance parse_benchmark(const std::string& path) {
  return parse_benchmark(path, deduce_format(path));
}

Instance parse_benchmark(const std::string& path, FileFormat format) {
  if (format == FileFormat::CanonicalJSON) return read_canonical(path);

  auto rows = read_numeric_rows(path);
  if (rows.empty()) {
    raise(ErrorCode::MalformedFile, path + ": no node rows", 0);
  }

  // Optional numeric header pair ("k v N t" then "D Q") from the legacy
  // distributions. A node row always has >= 7 fields.
  std::size_t begin = 0;
  int declared_nodes = -1;
  if (rows[0].fields.size() == 4) {
    declared_nodes = static_cast<int>(rows[0].fields[2]);
    begin = 1;
    if (rows.size() > 1 && rows[1].fields.size() == 2) begin = 2;
  }

  std::optional<ParsedNode> depot;
  std::vector<ParsedNode> pois;
  for (std::size_t r = begin; r < rows.size(); ++r) {
    ParsedNode pn = parse_row(rows[r], format, path);
    if (pn.id == 0 && !depot) {
      depot = pn;
    } else {
      pois.push_back(pn);
    }
  }
  if (!depot) {
    raise(ErrorCode::MalformedFile, path + ": missing depot row (id 0)", 0);
  }
  if (declared_nodes > 0) {
    const int have = static_cast<int>(pois.size()) + 1;
    if (have != declared_nodes) {
      raise(ErrorCode::MalformedFile,
            path + ": header declares " + std::to_string(declared_nodes) +
                " nodes, file has " + std::to_string(have),
            rows[0].line);
    }
  }

  Instance inst;
  inst.name = file_stem(path);
  switch (format) {
    case FileFormat::SolomonOPTW:
      inst.group_tag = GroupTag::Solomon;
      inst.rounding_decimals = 1;
      break;
    case FileFormat::CordeauOPTW:
      inst.group_tag = GroupTag::Cordeau;
      inst.rounding_decimals = 2;
      break;
    case FileFormat::GavalasOPTW:
      inst.group_tag = GroupTag::Gavalas;
      inst.rounding_decimals = 2;
      break;
    case FileFormat::CanonicalJSON:
      break;
  }

  inst.t_start = depot->node.open;
  inst.t_end = depot->node.close;
  depot->node.score = 0.0;
  depot->node.duration = 0.0;

  inst.nodes.push_back(depot->node);
  for (const auto& pn : pois) inst.nodes.push_back(pn.node);
  inst.nodes.push_back(depot->node);  // end depot shares the start location
  inst.start_index = 0;
  inst.end_index = inst.n() - 1;

  apply_region_normalization(inst);
  inst.finalize();
  return inst;
}

std::string canonical_to_string(const Instance& inst) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["name"] = inst.name;
  doc["group_tag"] = group_tag_name(inst.group_tag);
  doc["start_index"] = inst.start_index;
  doc["end_index"] = inst.end_index;
  doc["t_start"] = inst.t_start;
  doc["t_end"] = inst.t_end;
  doc["rounding_decimals"] = inst.rounding_decimals;
  doc["t_max"] = inst.t_max;
  doc["score_upper"] = inst.score_upper;
  ordered_json nodes = ordered_json::array();
  for (const Node& n : inst.nodes) {
    ordered_json jn;
    jn["x"] = n.x;
    jn["y"] = n.y;
    jn["score"] = n.score;
    jn["open"] = n.open;
    jn["close"] = n.close;
    jn["duration"] = n.duration;
    nodes.push_back(jn);
  }
  doc["nodes"] = nodes;
  return doc.dump(2) + "\n";
}

Instance canonical_from_string(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const std::exception& e) {
    raise(ErrorCode::MalformedFile, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer()) {
    raise(ErrorCode::MalformedFile, "missing schema_version");
  }
  const int version = doc["schema_version"].get<int>();
  if (version != 1) {
    raise(ErrorCode::SchemaVersionMismatch,
          "expected schema_version 1, got " + std::to_string(version));
  }
  Instance inst;
  try {
    inst.name = doc.at("name").get<std::string>();
    const auto tag = group_tag_from_name(doc.at("group_tag").get<std::string>());
    if (!tag) raise(ErrorCode::MalformedFile, "unknown group_tag");
    inst.group_tag = *tag;
    inst.start_index = doc.at("start_index").get<int>();
    inst.end_index = doc.at("end_index").get<int>();
    inst.t_start = doc.at("t_start").get<double>();
    inst.t_end = doc.at("t_end").get<double>();
    inst.rounding_decimals = doc.at("rounding_decimals").get<int>();
    inst.t_max = doc.at("t_max").get<double>();
    inst.score_upper = doc.at("score_upper").get<double>();
    for (const auto& jn : doc.at("nodes")) {
      Node n;
      n.x = jn.at("x").get<double>();
      n.y = jn.at("y").get<double>();
      n.score = jn.at("score").get<double>();
      n.open = jn.at("open").get<double>();
      n.close = jn.at("close").get<double>();
      n.duration = jn.at("duration").get<double>();
      inst.nodes.push_back(n);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorCode::MalformedFile, std::string("bad canonical document: ") + e.what());
  }
  inst.finalize();
  return inst;
}

void write_canonical(const Instance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path);
  out << canonical_to_string(inst);
  if (!out) raise(ErrorCode::IoError, "write failed for " + path);
}

Instance read_canonical(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return canonical_from_string(ss.str());
}

std::vector<Violation> validate_instance(const Instance& inst) {
  std::vector<Violation> out;
  if (inst.t_start > inst.t_end) out.push_back({"BudgetInverted", -1});
  if (inst.rounding_decimals != 1 && inst.rounding_decimals != 2) {
    out.push_back({"RoundingInvalid", -1});
  }
  if (inst.t_max < inst.t_end) out.push_back({"TMaxTooSmall", -1});
  if (inst.score_upper <= 0.0) out.push_back({"ScoreUpperInvalid", -1});
  if (inst.start_index < 0 || inst.start_index >= inst.n()) {
    out.push_back({"StartIndexInvalid", -1});
  }
  if (inst.end_index < 0 || inst.end_index >= inst.n()) {
    out.push_back({"EndIndexInvalid", -1});
  }
  for (int i = 0; i < inst.n(); ++i) {
    const Node& n = inst.nodes[i];
    if (n.open > n.close) out.push_back({"WindowInverted", i});
    if (n.duration < 0.0) out.push_back({"NegativeDuration", i});
    if (n.score < 0.0) out.push_back({"NegativeScore", i});
  }
  return out;
}

std::map<std::string, SidecarScores> load_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    raise(ErrorCode::MalformedFile, path + ": " + e.what());
  }
  std::map<std::string, SidecarScores> table;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    SidecarScores s;
    if (it.value().contains("best_known")) s.best_known = it.value()["best_known"].get<double>();
    if (it.value().contains("ils")) s.ils = it.value()["ils"].get<double>();
    table[it.key()] = s;
  }
  return table;
}

}  // namespace optw
