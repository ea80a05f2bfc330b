#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "itep/common.hpp"
#include "itep/discretization.hpp"
#include "itep/oracle_1d.hpp"

namespace itep::io {

using json = nlohmann::json;

// Round-trip scientific notation with 17 significant digits.
std::string fmt(double x);

using CsvRow = std::vector<std::string>;
// An empty header writes no header line.
void write_csv(const std::filesystem::path& path, const CsvRow& header, const std::vector<CsvRow>& rows);
void write_json(const std::filesystem::path& path, const json& value);

// <file>.manifest.json next to an output file.
struct Manifest {
  std::string subcommand;
  json config;
  std::uint64_t seed = 0;
};
void write_manifest(const std::filesystem::path& output, const Manifest& m);

json read_json_file(const std::filesystem::path& path);

// Complex values in configs are a number or a [re, im] pair.
cplx parse_complex(const json& v, const std::string& what);
json complex_to_json(cplx z);
CMat parse_matrix(const json& v, const std::string& what);

// "pencil" section. Assembled pencils:
//   {"type": "assembled", "kind": "helmholtz" | "schrodinger",
//    "q": {"type": "constant" | "polynomial" | "samples", "data": [...]} (a bare number means constant),
//    "q_min": .., "q_max": .., "bc": [m1, m2],
//    "domain": {"a": 0, "b": 1, "n": 64} | {"ax": .., "bx": .., "nx": .., "ay": .., "by": .., "ny": ..}}
// Raw pencils:
//   {"type": "matrices", "A0": [[...]], "A1": [[...]], "A2": [[...]], "weights": [...]}
struct PencilConfig {
  enum class Type { Assembled, Matrices };
  Type type = Type::Assembled;
  MediumProfile profile;
  BoundaryPair bc;
  double ax = 0.0, bx = 1.0;
  int nx = 64;
  bool two_d = false;
  double ay = 0.0, by = 1.0;
  int ny = 64;
  CMat A0, A1, A2;
  RVec weights;

  json to_json() const;
};

PencilConfig parse_pencil(const json& v);
// extra_pts is added to every grid dimension (used for the refined reference grid).
DiscretePencil build_pencil(const PencilConfig& cfg, int extra_pts = 0);

// Row-major matrix with interleaved real and imaginary parts: re00,im00,re01,im01,...
void write_matrix_csv(const std::filesystem::path& path, const CMat& M);

// Oracle function for constant-q assembled 1D configs.
std::optional<CharacteristicFunction> oracle_for(const PencilConfig& cfg);

// Convenience accessors that raise Config errors with the key name.
double get_double(const json& obj, const std::string& key, std::optional<double> fallback = std::nullopt);
int get_int(const json& obj, const std::string& key, std::optional<int> fallback = std::nullopt);
std::vector<double> get_doubles(const json& obj, const std::string& key,
                                std::optional<std::vector<double>> fallback = std::nullopt);

}  // namespace itep::io
