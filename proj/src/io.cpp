#include "fvsggm/io.hpp"

#include <charconv>
#include <cstdio>
#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "fvsggm/error.hpp"

namespace fvsggm {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      throw_input(source + ": line " + std::to_string(line_no) + " has " +
                  std::to_string(fields.size()) + " fields, expected " + std::to_string(width));
    }
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t c = 0; c < fields.size() && numeric; ++c) numeric = parse_number(fields[c], row[c]);
    if (!numeric) {
      if (rows.empty() && table.header.empty()) {
        for (auto f : fields) table.header.emplace_back(f);
        continue;
      }
      throw_input(source + ": non-numeric value on line " + std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw_input(source + ": no numeric rows");
  table.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) table.data(r, c) = rows[r][c];
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_input("cannot open " + path);
  return parse_csv(in, path);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const MatrixXd& data) {
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
  }
  for (Index r = 0; r < data.rows(); ++r) {
    for (Index c = 0; c < data.cols(); ++c) out << (c ? "," : "") << format_double(data(r, c));
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const MatrixXd& data) {
  std::ofstream out(path);
  if (!out) throw_input("cannot write " + path);
  write_csv(out, header, data);
}

std::string serialize_model(const ModelFile& file) {
  const FvsModel& m = file.model;
  const auto& fvs = m.part.fvs();
  const auto& t = m.part.tree_nodes();
  json doc = json::object();
  doc["schema_version"] = kModelSchemaVersion;
  doc["n"] = m.n();
  doc["k"] = m.k();
  doc["fvs"] = fvs;

  json edges = json::array();
  for (const Edge& e : m.j_t.tree.edges()) edges.push_back({t[e.u], t[e.v]});
  doc["tree_edges"] = edges;

  json jf = json::array();
  for (Index a = 0; a < m.k(); ++a)
    for (Index b = a; b < m.k(); ++b)
      if (m.j_f(a, b) != 0.0) jf.push_back({fvs[a], fvs[b], m.j_f(a, b)});
  json jm = json::array();
  for (Index i = 0; i < m.j_m.rows(); ++i)
    for (Index a = 0; a < m.k(); ++a)
      if (m.j_m(i, a) != 0.0) jm.push_back({t[i], fvs[a], m.j_m(i, a)});
  json jt = json::array();
  for (Index i = 0; i < m.j_t.size(); ++i) jt.push_back({t[i], t[i], m.j_t.diag(i)});
  const auto& te = m.j_t.tree.edges();
  for (std::size_t e = 0; e < te.size(); ++e) jt.push_back({t[te[e].u], t[te[e].v], m.j_t.edge[e]});
  doc["j_blocks"] = {{"j_f", jf}, {"j_m", jm}, {"j_t", jt}};

  if (m.h.size() > 0 && !m.h.isZero(0.0)) doc["h"] = std::vector<double>(m.h.data(), m.h.data() + m.h.size());
  if (file.sigma) {
    json rows = json::array();
    for (Index i = 0; i < file.sigma->dim(); ++i) {
      json row = json::array();
      for (Index j = 0; j < file.sigma->dim(); ++j) row.push_back((*file.sigma)(i, j));
      rows.push_back(std::move(row));
    }
    doc["sigma"] = std::move(rows);
  }
  doc["metadata"] = file.metadata.is_object() ? file.metadata : json::object();
  return doc.dump(1) + "\n";
}

namespace {

const json& field(const json& doc, const char* name) {
  const auto it = doc.find(name);
  if (it == doc.end()) throw_input(std::string("model file: missing field '") + name + "'");
  return *it;
}

Index as_index(const json& v, const char* what) {
  if (!v.is_number_integer()) throw_input(std::string("model file: ") + what + " must be an integer");
  return v.get<Index>();
}

double as_double(const json& v, const char* what) {
  if (!v.is_number()) throw_input(std::string("model file: ") + what + " must be a number");
  return v.get<double>();
}

struct Triplet {
  Index i, j;
  double v;
};

std::vector<Triplet> triplets(const json& blocks, const char* name) {
  const json& arr = field(blocks, name);
  if (!arr.is_array()) throw_input(std::string("model file: ") + name + " must be an array");
  std::vector<Triplet> out;
  for (const json& e : arr) {
    if (!e.is_array() || e.size() != 3) throw_input(std::string("model file: ") + name + " entries must be [i, j, value]");
    out.push_back({as_index(e[0], name), as_index(e[1], name), as_double(e[2], name)});
  }
  return out;
}

}  // namespace

ModelFile parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw_input(std::string("model file: ") + e.what());
  }
  if (!doc.is_object()) throw_input("model file: top level must be an object");
  const json& version = field(doc, "schema_version");
  if (!version.is_string() || version.get<std::string>() != kModelSchemaVersion) {
    throw_input("model file: unsupported schema_version");
  }
  const Index n = as_index(field(doc, "n"), "n");
  const Index k = as_index(field(doc, "k"), "k");
  const json& fvs_json = field(doc, "fvs");
  const json& edges_json = field(doc, "tree_edges");
  const json& blocks = field(doc, "j_blocks");
  if (!fvs_json.is_array() || !edges_json.is_array() || !blocks.is_object()) {
    throw_input("model file: fvs, tree_edges and j_blocks have the wrong type");
  }
  if (n < 1) throw_input("model file: n must be positive");
  std::vector<Index> fvs;
  for (const json& v : fvs_json) fvs.push_back(as_index(v, "fvs"));
  if (static_cast<Index>(fvs.size()) != k) throw_input("model file: k does not match the fvs list");

  ModelFile file;
  FvsModel& m = file.model;
  try {
    m.part = Partition(n, fvs);
    const auto& t = m.part.tree_nodes();
    std::vector<Index> slot(static_cast<std::size_t>(n), -1);  // position within F or T
    std::vector<bool> in_f(static_cast<std::size_t>(n), false);
    for (Index a = 0; a < k; ++a) {
      slot[fvs[a]] = a;
      in_f[fvs[a]] = true;
    }
    for (Index i = 0; i < m.part.m(); ++i) slot[t[i]] = i;
    auto check_id = [&](Index id) {
      if (id < 0 || id >= n) throw_input("model file: node id " + std::to_string(id) + " out of range");
    };

    std::vector<Edge> edges;
    for (const json& e : edges_json) {
      if (!e.is_array() || e.size() != 2) throw_input("model file: tree_edges entries must be pairs");
      const Index u = as_index(e[0], "tree_edges"), v = as_index(e[1], "tree_edges");
      check_id(u);
      check_id(v);
      if (in_f[u] || in_f[v]) throw_input("model file: tree edge touches a feedback node");
      edges.push_back({std::min(slot[u], slot[v]), std::max(slot[u], slot[v])});
    }
    std::map<std::pair<Index, Index>, std::size_t> edge_index;
    for (std::size_t e = 0; e < edges.size(); ++e) edge_index[{edges[e].u, edges[e].v}] = e;
    m.j_t.tree = SpanningTree(m.part.m(), edges);
    m.j_t.diag = VectorXd::Constant(m.part.m(), std::numeric_limits<double>::quiet_NaN());
    m.j_t.edge.assign(edges.size(), 0.0);
    for (const Triplet& tr : triplets(blocks, "j_t")) {
      check_id(tr.i);
      check_id(tr.j);
      if (in_f[tr.i] || in_f[tr.j]) throw_input("model file: j_t entry touches a feedback node");
      const Index a = std::min(slot[tr.i], slot[tr.j]), b = std::max(slot[tr.i], slot[tr.j]);
      if (a == b) {
        m.j_t.diag(a) = tr.v;
        continue;
      }
      const auto it = edge_index.find({a, b});
      if (it == edge_index.end()) {
        throw_input("model file: j_t entry (" + std::to_string(tr.i) + "," + std::to_string(tr.j) +
                    ") is not a tree edge");
      }
      m.j_t.edge[it->second] = tr.v;
    }
    if (m.part.m() > 0 && !m.j_t.diag.allFinite()) throw_input("model file: j_t is missing a diagonal entry");

    m.j_f = MatrixXd::Zero(k, k);
    for (const Triplet& tr : triplets(blocks, "j_f")) {
      check_id(tr.i);
      check_id(tr.j);
      if (!in_f[tr.i] || !in_f[tr.j]) throw_input("model file: j_f entry outside the feedback set");
      m.j_f(slot[tr.i], slot[tr.j]) = tr.v;
      m.j_f(slot[tr.j], slot[tr.i]) = tr.v;
    }
    m.j_m = MatrixXd::Zero(m.part.m(), k);
    for (const Triplet& tr : triplets(blocks, "j_m")) {
      check_id(tr.i);
      check_id(tr.j);
      if (in_f[tr.i] || !in_f[tr.j]) throw_input("model file: j_m entries must be (tree node, feedback node)");
      m.j_m(slot[tr.i], slot[tr.j]) = tr.v;
    }
    m.h = VectorXd::Zero(n);
    if (const auto it = doc.find("h"); it != doc.end()) {
      if (!it->is_array() || static_cast<Index>(it->size()) != n) throw_input("model file: h must have n entries");
      for (Index i = 0; i < n; ++i) m.h(i) = as_double((*it)[i], "h");
    }
    if (const auto it = doc.find("sigma"); it != doc.end()) {
      if (!it->is_array() || static_cast<Index>(it->size()) != n) throw_input("model file: sigma must be n x n");
      MatrixXd s(n, n);
      for (Index i = 0; i < n; ++i) {
        const json& row = (*it)[i];
        if (!row.is_array() || static_cast<Index>(row.size()) != n) throw_input("model file: sigma must be n x n");
        for (Index j = 0; j < n; ++j) s(i, j) = as_double(row[j], "sigma");
      }
      file.sigma = SymMatrix::checked(s);
    }
    if (const auto it = doc.find("metadata"); it != doc.end()) {
      if (!it->is_object()) throw_input("model file: metadata must be an object");
      file.metadata = *it;
    }
    m.validate();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Input && std::string(e.what()).rfind("model file:", 0) == 0) throw;
    throw_numerical(std::string("model file violates an FVS model invariant: ") + e.what());
  }
  return file;
}

ModelFile read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_input("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

void write_model_file(const std::string& path, const ModelFile& file) {
  std::ofstream out(path);
  if (!out) throw_input("cannot write " + path);
  out << serialize_model(file);
}

std::uint64_t tree_edge_hash(const std::vector<Edge>& edges) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const Edge& e : edges) {
    mix(static_cast<std::uint64_t>(e.u));
    mix(static_cast<std::uint64_t>(e.v));
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace fvsggm
