#pragma once

// CSV matrices and the versioned JSON model file.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fvsggm/fvs_model.hpp"

namespace fvsggm {

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has no header row
  MatrixXd data;
};

/// Comma separated, row-major. A first row containing any non-numeric field is
/// taken as the header. Ragged rows and unparsable cells are Input errors.
CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv(const std::string& path);

/// 17 significant digits, so values survive a write/read cycle exactly.
std::string format_double(double v);
void write_csv(std::ostream& out, const std::vector<std::string>& header, const MatrixXd& data);
void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const MatrixXd& data);

inline constexpr const char* kModelSchemaVersion = "1";

struct ModelFile {
  FvsModel model;
  std::optional<SymMatrix> sigma;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Deterministic JSON text; parse(serialize(m)) serializes to the same bytes.
std::string serialize_model(const ModelFile& file);
/// Input error on malformed JSON or schema; Numerical error when the decoded
/// model violates an FvsModel invariant.
ModelFile parse_model(const std::string& text);
ModelFile read_model_file(const std::string& path);
void write_model_file(const std::string& path, const ModelFile& file);

/// 64-bit FNV-1a over the (u, v) pairs in order.
std::uint64_t tree_edge_hash(const std::vector<Edge>& edges);
std::string hex64(std::uint64_t v);

}  // namespace fvsggm
