#include "itep/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace itep::io {

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x == 0.0 ? 0.0 : x);  // folds -0 into 0
  return buf;
}

void write_csv(const std::filesystem::path& path, const CsvRow& header, const std::vector<CsvRow>& rows) {
  std::ostringstream os;
  auto line = [&](const CsvRow& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  };
  if (!header.empty()) line(header);
  for (const auto& r : rows) line(r);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Config, "cannot write " + path.string());
  f << os.str();
}

void write_json(const std::filesystem::path& path, const json& value) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Config, "cannot write " + path.string());
  f << value.dump(2) << '\n';
}

void write_manifest(const std::filesystem::path& output, const Manifest& m) {
  json j;
  j["tool"] = "itep";
  j["version"] = kVersion;
  j["subcommand"] = m.subcommand;
  j["file"] = output.filename().string();
  j["seed"] = m.seed;
  j["config"] = m.config;
  write_json(output.string() + ".manifest.json", j);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) config_error("cannot open config " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    config_error("config is not valid JSON: " + std::string(e.what()));
  }
}

cplx parse_complex(const json& v, const std::string& what) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  config_error(what + " must be a number or a [re, im] pair");
}

json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

CMat parse_matrix(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) config_error(what + " must be a non-empty list of rows");
  const std::size_t n = v.size();
  CMat M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(v[0].is_array() ? v[0].size() : 0));
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_array() || v[i].size() != static_cast<std::size_t>(M.cols())) config_error(what + " rows must have equal length");
    for (std::size_t j = 0; j < v[i].size(); ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_complex(v[i][j], what);
  }
  return M;
}

double get_double(const json& obj, const std::string& key, std::optional<double> fallback) {
  if (!obj.is_object() || !obj.contains(key)) {
    if (fallback) return *fallback;
    config_error("missing key '" + key + "'");
  }
  const json& v = obj.at(key);
  if (!v.is_number()) config_error("'" + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) config_error("'" + key + "' must be finite");
  return x;
}

int get_int(const json& obj, const std::string& key, std::optional<int> fallback) {
  if (!obj.is_object() || !obj.contains(key)) {
    if (fallback) return *fallback;
    config_error("missing key '" + key + "'");
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer()) config_error("'" + key + "' must be an integer");
  return v.get<int>();
}

std::vector<double> get_doubles(const json& obj, const std::string& key, std::optional<std::vector<double>> fallback) {
  if (!obj.is_object() || !obj.contains(key)) {
    if (fallback) return *fallback;
    config_error("missing key '" + key + "'");
  }
  const json& v = obj.at(key);
  if (!v.is_array()) config_error("'" + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) config_error("'" + key + "' must be a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

PencilConfig parse_pencil(const json& v) {
  if (!v.is_object()) config_error("'pencil' must be an object");
  PencilConfig c;
  const std::string type = v.contains("type") ? lower(v.at("type").get<std::string>()) : "assembled";
  if (type == "matrices") {
    c.type = PencilConfig::Type::Matrices;
    if (!v.contains("A0") || !v.contains("A1") || !v.contains("A2")) config_error("matrix pencils need A0, A1 and A2");
    c.A0 = parse_matrix(v.at("A0"), "A0");
    c.A1 = parse_matrix(v.at("A1"), "A1");
    c.A2 = parse_matrix(v.at("A2"), "A2");
    if (c.A0.rows() != c.A0.cols() || c.A1.rows() != c.A0.rows() || c.A1.cols() != c.A0.cols() ||
        c.A2.rows() != c.A0.rows() || c.A2.cols() != c.A0.cols())
      config_error("A0, A1, A2 must be square and of equal size");
    if (v.contains("weights")) {
      const auto w = get_doubles(v, "weights");
      c.weights = Eigen::Map<const RVec>(w.data(), static_cast<Eigen::Index>(w.size()));
      if (c.weights.size() != c.A0.rows() || (c.weights.array() <= 0).any())
        config_error("weights must be positive, one per row");
    }
    return c;
  }
  if (type != "assembled") config_error("pencil type must be 'assembled' or 'matrices'");

  try {
    c.profile.kind = parse_kind(v.value("kind", std::string("helmholtz")));
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (!v.contains("q")) config_error("missing key 'q'");
  const json& q = v.at("q");
  if (q.is_number()) {
    c.profile.q.type = CoefficientSpec::Type::Constant;
    c.profile.q.data = {q.get<double>()};
  } else if (q.is_object()) {
    const std::string qt = lower(q.value("type", std::string("constant")));
    if (qt == "constant")
      c.profile.q.type = CoefficientSpec::Type::Constant;
    else if (qt == "polynomial")
      c.profile.q.type = CoefficientSpec::Type::Polynomial;
    else if (qt == "samples")
      c.profile.q.type = CoefficientSpec::Type::Samples;
    else
      config_error("q.type must be constant, polynomial or samples");
    c.profile.q.data = get_doubles(q, "data");
    if (c.profile.q.data.empty()) config_error("q.data is empty");
    if (c.profile.q.type == CoefficientSpec::Type::Constant && c.profile.q.data.size() != 1)
      config_error("constant q takes one value");
  } else {
    config_error("'q' must be a number or {type, data}");
  }
  if (v.contains("q_min")) c.profile.q_min = get_double(v, "q_min");
  if (v.contains("q_max")) c.profile.q_max = get_double(v, "q_max");
  if (c.profile.q.type == CoefficientSpec::Type::Constant && !(c.profile.q.data[0] > 0))
    config_error("q must be positive");

  const auto bc = get_doubles(v, "bc", std::vector<double>{0, 1});
  if (bc.size() != 2) config_error("'bc' must be a pair of derivative orders");
  c.bc = {static_cast<int>(bc[0]), static_cast<int>(bc[1])};
  if (c.bc.m1 != bc[0] || c.bc.m2 != bc[1]) config_error("'bc' orders must be integers");
  try {
    validate(c.bc);
  } catch (const Error& e) {
    config_error(e.what());
  }

  const json dom = v.value("domain", json::object());
  if (!dom.is_object()) config_error("'domain' must be an object");
  c.two_d = dom.contains("nx") || dom.contains("ny") || dom.contains("ax");
  if (c.two_d) {
    c.ax = get_double(dom, "ax", 0.0);
    c.bx = get_double(dom, "bx", 1.0);
    c.nx = get_int(dom, "nx", 16);
    c.ay = get_double(dom, "ay", 0.0);
    c.by = get_double(dom, "by", 1.0);
    c.ny = get_int(dom, "ny", 16);
    if (!(c.ay < c.by)) config_error("domain needs ay < by");
    if (c.ny < 8) config_error("ny must be at least 8");
    if (c.profile.q.type == CoefficientSpec::Type::Samples) config_error("2D pencils take constant or polynomial q");
  } else {
    c.ax = get_double(dom, "a", 0.0);
    c.bx = get_double(dom, "b", 1.0);
    c.nx = get_int(dom, "n", 64);
  }
  if (!(c.ax < c.bx)) config_error("domain needs a < b");
  if (c.nx < 8) config_error("n must be at least 8");
  return c;
}

json PencilConfig::to_json() const {
  json j;
  if (type == Type::Matrices) {
    j["type"] = "matrices";
    auto mat = [](const CMat& M) {
      json rows = json::array();
      for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index k = 0; k < M.cols(); ++k) r.push_back(complex_to_json(M(i, k)));
        rows.push_back(r);
      }
      return rows;
    };
    j["A0"] = mat(A0);
    j["A1"] = mat(A1);
    j["A2"] = mat(A2);
    if (weights.size()) j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
    return j;
  }
  j["type"] = "assembled";
  j["kind"] = to_string(profile.kind);
  static const char* names[] = {"constant", "polynomial", "samples"};
  j["q"] = {{"type", names[static_cast<int>(profile.q.type)]}, {"data", profile.q.data}};
  if (profile.q_min) j["q_min"] = *profile.q_min;
  if (profile.q_max) j["q_max"] = *profile.q_max;
  j["bc"] = {bc.m1, bc.m2};
  if (two_d)
    j["domain"] = {{"ax", ax}, {"bx", bx}, {"nx", nx}, {"ay", ay}, {"by", by}, {"ny", ny}};
  else
    j["domain"] = {{"a", ax}, {"b", bx}, {"n", nx}};
  return j;
}

DiscretePencil build_pencil(const PencilConfig& cfg, int extra_pts) {
  if (cfg.type == PencilConfig::Type::Matrices) return make_matrix_pencil(cfg.A0, cfg.A1, cfg.A2, cfg.weights);
  if (extra_pts != 0 && cfg.profile.q.type == CoefficientSpec::Type::Samples)
    throw Error(ErrorCode::Config, "sampled q is tied to one grid and cannot be refined");
  const Grid1D gx = make_grid(cfg.ax, cfg.bx, cfg.nx + extra_pts);
  if (cfg.two_d) return assemble_pencil_2d(cfg.profile, gx, make_grid(cfg.ay, cfg.by, cfg.ny + extra_pts), cfg.bc);
  return assemble_pencil(cfg.profile, gx, cfg.bc);
}

void write_matrix_csv(const std::filesystem::path& path, const CMat& M) {
  std::vector<CsvRow> rows;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    CsvRow r;
    for (Eigen::Index k = 0; k < M.cols(); ++k) {
      r.push_back(fmt(M(i, k).real()));
      r.push_back(fmt(M(i, k).imag()));
    }
    rows.push_back(std::move(r));
  }
  write_csv(path, {}, rows);
}

std::optional<CharacteristicFunction> oracle_for(const PencilConfig& cfg) {
  if (cfg.type != PencilConfig::Type::Assembled || cfg.two_d ||
      cfg.profile.q.type != CoefficientSpec::Type::Constant)
    return std::nullopt;
  return CharacteristicFunction{cfg.profile.kind, cfg.profile.q.data[0], cfg.bx - cfg.ax, cfg.bc};
}

}  // namespace itep::io
