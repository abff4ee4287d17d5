#include <doctest.h>

#include <algorithm>
#include <limits>
#include <sstream>

#include "fvsggm/error.hpp"
#include "fvsggm/experiments.hpp"
#include "fvsggm/io.hpp"

using namespace fvsggm;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Input;
}

}  // namespace

TEST_CASE("parse_csv detects a header row") {
  std::istringstream with("a,b\n1,2\n3,4.5\n");
  const CsvTable t = parse_csv(with);
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.data.rows() == 2);
  CHECK(t.data(1, 1) == 4.5);

  std::istringstream without("1, 2\r\n-3e-2,+4\n\n");
  const CsvTable u = parse_csv(without);
  CHECK(u.header.empty());
  CHECK(u.data(1, 0) == -0.03);
  CHECK(u.data(1, 1) == 4.0);
}

TEST_CASE("parse_csv rejects ragged and non-numeric input") {
  std::istringstream ragged("1,2\n3\n");
  CHECK(kind_of([&] { parse_csv(ragged); }) == ErrorKind::Input);
  std::istringstream text("1,2\nx,4\n");
  CHECK(kind_of([&] { parse_csv(text); }) == ErrorKind::Input);
  std::istringstream empty("");
  CHECK(kind_of([&] { parse_csv(empty); }) == ErrorKind::Input);
  CHECK(kind_of([] { read_csv("/nonexistent/file.csv"); }) == ErrorKind::Input);
}

TEST_CASE("CSV output round-trips doubles exactly") {
  MatrixXd m(2, 2);
  m << 0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789;
  std::ostringstream out;
  write_csv(out, {"x", "y"}, m);
  std::istringstream in(out.str());
  const CsvTable t = parse_csv(in);
  CHECK(t.data == m);
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("model files round-trip byte for byte") {
  ModelFile f;
  f.model = random_fvs_model(12, 3, 5);
  f.model.h = VectorXd::LinSpaced(12, -1.0, 1.0);
  f.sigma = SymMatrix(MatrixXd(f.model.assemble().inverse()));
  f.metadata = {{"seed", 5}, {"algorithm", "test"}, {"iterations", 0}, {"objective", 0.25}, {"ridge", 0.0}};
  const std::string a = serialize_model(f);
  const ModelFile g = parse_model(a);
  CHECK(serialize_model(g) == a);
  CHECK(g.model.assemble() == f.model.assemble());
  CHECK(g.model.h == f.model.h);
  CHECK(g.metadata["algorithm"] == "test");

  ModelFile tree;
  tree.model = random_fvs_model(6, 0, 1);
  const std::string s = serialize_model(tree);
  CHECK(serialize_model(parse_model(s)) == s);
  CHECK(parse_model(s).model.h.isZero(0.0));
}

TEST_CASE("parse_model rejects invalid files") {
  ModelFile f;
  f.model = random_fvs_model(6, 1, 2);
  const std::string good = serialize_model(f);

  CHECK(kind_of([] { parse_model("{not json"); }) == ErrorKind::Input);
  CHECK(kind_of([] { parse_model("[]"); }) == ErrorKind::Input);
  nlohmann::json doc = nlohmann::json::parse(good);

  auto variant = [&](const std::function<void(nlohmann::json&)>& edit) {
    nlohmann::json d = doc;
    edit(d);
    return kind_of([&] { parse_model(d.dump()); });
  };
  CHECK(variant([](nlohmann::json& d) { d["schema_version"] = "2"; }) == ErrorKind::Input);
  CHECK(variant([](nlohmann::json& d) { d.erase("tree_edges"); }) == ErrorKind::Input);
  CHECK(variant([](nlohmann::json& d) { d["k"] = 2; }) == ErrorKind::Input);
  const auto& t = f.model.part.tree_nodes();
  std::vector<Edge> edges = global_tree_edges(f.model);
  Edge off{-1, -1};
  for (std::size_t a = 0; a < t.size() && off.u < 0; ++a)
    for (std::size_t b = a + 1; b < t.size() && off.u < 0; ++b)
      if (std::find(edges.begin(), edges.end(), Edge{t[a], t[b]}) == edges.end()) off = {t[a], t[b]};
  CHECK(variant([&](nlohmann::json& d) { d["j_blocks"]["j_t"].push_back({off.u, off.v, 0.1}); }) ==
        ErrorKind::Input);
  CHECK(variant([](nlohmann::json& d) {
          for (auto& e : d["j_blocks"]["j_t"]) e[2] = -e[2].get<double>();
        }) == ErrorKind::Numerical);
  CHECK(variant([](nlohmann::json& d) {
          const nlohmann::json e = d["tree_edges"][0];
          d["tree_edges"].erase(d["tree_edges"].begin());
          auto& jt = d["j_blocks"]["j_t"];
          for (auto it = jt.begin(); it != jt.end(); ++it)
            if ((*it)[0] == e[0] && (*it)[1] == e[1]) {
              jt.erase(it);
              break;
            }
        }) == ErrorKind::Numerical);
  CHECK(variant([](nlohmann::json& d) { d["fvs"][0] = 99; }) == ErrorKind::Numerical);
}

TEST_CASE("tree_edge_hash") {
  const std::vector<Edge> a{{0, 1}, {1, 2}}, b{{0, 1}, {0, 2}};
  CHECK(tree_edge_hash(a) == tree_edge_hash(a));
  CHECK(tree_edge_hash(a) != tree_edge_hash(b));
  CHECK(tree_edge_hash({}) == 0xcbf29ce484222325ULL);
  CHECK(hex64(255) == "00000000000000ff");
}
