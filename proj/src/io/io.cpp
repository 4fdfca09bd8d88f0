#include "hyperinv/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

namespace hyperinv::io {

namespace {

[[noreturn]] void io_error(const std::string& what, const fs::path& path) {
  throw Error(ErrorCode::kIo, what + " '" + path.string() + "'");
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) io_error("cannot write", path);
  return os;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

std::string hex(const unsigned char* d, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < n; ++i) {
    out += digits[d[i] >> 4];
    out += digits[d[i] & 15];
  }
  return out;
}

Vec time_column(const TimeGrid& grid) {
  Vec t(grid.nodes());
  for (int n = 0; n <= grid.N; ++n) t(n) = grid.t(n);
  return t;
}

SpMat sparse_from_json(const json& j) {
  SpMat m(j.at("rows").get<int>(), j.at("cols").get<int>());
  std::vector<Eigen::Triplet<double>> trip;
  const auto& I = j.at("i");
  const auto& J = j.at("j");
  const auto& V = j.at("v");
  for (size_t k = 0; k < I.size(); ++k) trip.emplace_back(I[k].get<int>(), J[k].get<int>(), V[k].get<double>());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header, const Mat& values,
               const Vec& lead) {
  const bool has_lead = lead.size() > 0;
  if (static_cast<Eigen::Index>(header.size()) != values.cols() + (has_lead ? 1 : 0)) {
    throw Error(ErrorCode::kIo, "header width does not match the table for '" + path.string() + "'");
  }
  std::ostringstream os;
  for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    bool first = true;
    if (has_lead) {
      os << format_number(lead(r));
      first = false;
    }
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (!first) os << ',';
      os << format_number(values(r, c));
      first = false;
    }
    os << '\n';
  }
  auto out = open_out(path);
  out << os.str();
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) io_error("cannot read", path);
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) io_error("empty CSV", path);
  for (auto& h : split(strip(line))) t.header.push_back(strip(h));
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      io_error("row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                   " cells, header has " + std::to_string(t.header.size()) + ", in",
               path);
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        size_t used = 0;
        const std::string s = strip(c);
        row.push_back(std::stod(s, &used));
        if (used != s.size()) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        io_error("non-numeric cell '" + c + "' on row " + std::to_string(lineno) + " of", path);
      }
    }
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) t.values(r, c) = rows[r][c];
  }
  return t;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) io_error("cannot read", path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, "malformed JSON in '" + path.string() + "': " + e.what());
  }
}

json sparse_to_json(const SpMat& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<int> I, J;
  std::vector<double> V;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      I.push_back(static_cast<int>(it.row()));
      J.push_back(static_cast<int>(it.col()));
      V.push_back(it.value());
    }
  }
  j["i"] = I;
  j["j"] = J;
  j["v"] = V;
  return j;
}

json mesh_to_json(const Discretization& disc) {
  json j;
  j["problem"] = std::string(to_string(disc.kind));
  j["dim"] = disc.dim;
  j["components"] = disc.components;
  json nodes = json::array();
  for (const auto& p : disc.nodes) {
    nodes.push_back(disc.dim == 1 ? json::array({p[0]}) : json::array({p[0], p[1]}));
  }
  j["nodes"] = nodes;
  json elems = json::array();
  for (const auto& e : disc.elements) {
    json row = json::array();
    for (int a = 0; a < disc.nodes_per_element; ++a) row.push_back(e[a]);
    elems.push_back(row);
  }
  j["elements"] = elems;
  j["free_dofs"] = disc.free_dofs;
  j["M"] = sparse_to_json(disc.M);
  j["K_V"] = sparse_to_json(disc.K_V);
  return j;
}

json operators_to_json(const OperatorTimeline& tl, int n) {
  if (n < 0 || n > tl.grid.N) throw Error(ErrorCode::kPrecondition, "time node out of range");
  json j;
  j["time_node"] = n;
  j["t"] = tl.grid.t(n);
  j["A"] = sparse_to_json(tl.A[n]);
  j["C"] = sparse_to_json(tl.C[n]);
  if (tl.has_B) j["B"] = sparse_to_json(tl.B[n]);
  if (tl.has_Q) j["Q"] = sparse_to_json(tl.Q[n]);
  return j;
}

void write_field_csv(const fs::path& path, const ParameterField& f, const Discretization& disc) {
  std::vector<std::string> header{"t"};
  for (int i = 0; i < disc.num_nodes(); ++i) header.push_back("n" + std::to_string(i));
  write_csv(path, header, f.values, time_column(f.grid));
}

ParameterField read_field_csv(const fs::path& path, const TimeGrid& grid, int num_nodes) {
  const CsvTable t = read_csv(path);
  const bool lead = !t.header.empty() && t.header.front() == "t";
  const Eigen::Index cols = t.values.cols() - (lead ? 1 : 0);
  if (t.values.rows() != grid.nodes() || cols != num_nodes) {
    std::ostringstream os;
    os << "field CSV has " << t.values.rows() << " time rows x " << cols
       << " node columns, expected " << grid.nodes() << " x " << num_nodes << " in";
    io_error(os.str(), path);
  }
  return ParameterField{grid, t.values.rightCols(cols)};
}

std::vector<std::string> dof_labels(const Discretization& disc) {
  std::vector<std::string> out;
  for (int g : disc.free_dofs) {
    const int node = g / disc.components;
    std::string s = "n" + std::to_string(node);
    if (disc.components == 2) s += g % 2 == 0 ? "x" : "y";
    out.push_back(s);
  }
  return out;
}

std::vector<fs::path> write_trajectory(const fs::path& dir, const Trajectory& traj,
                                       const Discretization& disc, const std::string& stem) {
  std::vector<std::string> header{"t"};
  for (auto& l : dof_labels(disc)) header.push_back(l);
  const Vec t = time_column(traj.grid);
  const fs::path pu = dir / (stem + "_u.csv");
  const fs::path pdu = dir / (stem + "_du.csv");
  write_csv(pu, header, traj.u, t);
  write_csv(pdu, header, traj.du, t);
  json j;
  j["grid"] = {{"T", traj.grid.T}, {"N", traj.grid.N}, {"dt", traj.grid.dt()}};
  j["scheme"] = "implicit-midpoint";
  j["mode"] = traj.mode;
  j["ndof"] = traj.ndof();
  j["columns"] = "t then one column per free DOF";
  j["tolerances"] = {{"linear_solver", "sparse LU, direct"}, {"symmetry", 1e-12}};
  j["files"] = {pu.filename().string(), pdu.filename().string()};
  const fs::path pj = dir / (stem + ".json");
  write_json(pj, j);
  return {pu, pdu, pj};
}

json spec_to_json(const ObservationSpec& spec) {
  json j;
  j["kind"] = spec.kind == ObservationSpec::Kind::kFullField ? "full-field" : "node-subset";
  j["grid"] = {{"T", spec.grid.T}, {"N", spec.grid.N}};
  j["ndof"] = spec.ndof;
  j["indices"] = spec.indices;
  j["time_weights"] = std::vector<double>(spec.time_weights.data(),
                                          spec.time_weights.data() + spec.time_weights.size());
  j["gram"] = sparse_to_json(spec.gram.sparseView());
  return j;
}

void write_data(const fs::path& csv, const fs::path& sidecar, const DataVector& data,
                const Discretization& disc) {
  const auto labels = dof_labels(disc);
  std::vector<std::string> header{"t"};
  for (int i : data.spec.indices) header.push_back(labels.at(i));
  Vec t(data.spec.grid.nodes());
  for (int n = 0; n <= data.spec.grid.N; ++n) t(n) = data.spec.grid.t(n);
  write_csv(csv, header, data.values, t);
  json j = spec_to_json(data.spec);
  j["values"] = csv.filename().string();
  write_json(sidecar, j);
}

DataVector read_data(const fs::path& csv, const fs::path& sidecar) {
  const json j = read_json(sidecar);
  DataVector d;
  try {
    const std::string kind = j.at("kind");
    if (kind != "full-field" && kind != "node-subset") {
      throw Error(ErrorCode::kObservationSpec, "unknown observation kind '" + kind + "'");
    }
    d.spec.kind = kind == "full-field" ? ObservationSpec::Kind::kFullField
                                       : ObservationSpec::Kind::kNodeSubset;
    d.spec.grid = TimeGrid{j.at("grid").at("T").get<double>(), j.at("grid").at("N").get<int>()};
    d.spec.ndof = j.at("ndof");
    d.spec.indices = j.at("indices").get<std::vector<int>>();
    const auto w = j.at("time_weights").get<std::vector<double>>();
    d.spec.time_weights = Eigen::Map<const Vec>(w.data(), static_cast<Eigen::Index>(w.size()));
    d.spec.gram = Mat(sparse_from_json(j.at("gram")));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, "bad data sidecar '" + sidecar.string() + "': " + e.what());
  }
  const CsvTable t = read_csv(csv);
  const Eigen::Index cols = static_cast<Eigen::Index>(d.spec.indices.size());
  if (t.values.rows() != d.spec.grid.nodes() || t.values.cols() != cols + 1) {
    io_error("data CSV does not match its sidecar", csv);
  }
  d.values = t.values.rightCols(cols);
  return d;
}

std::vector<fs::path> write_gradient(const fs::path& dir, const std::string& prefix,
                                     const GradientFields& g, const Discretization& disc) {
  std::vector<fs::path> out;
  for (const auto& [name, f] : g.fields) {
    const fs::path p = dir / (prefix + "_" + name + ".csv");
    write_field_csv(p, f, disc);
    out.push_back(p);
  }
  return out;
}

json dot_test_record(const DotTestResult& r, AdjointMode mode, double dt) {
  return json{{"mode", to_string(mode)}, {"dt", dt}, {"lhs", r.lhs}, {"rhs", r.rhs},
              {"mismatch", r.mismatch}};
}

void write_illposed_table(const fs::path& path, const IllposedResult& r) {
  Mat m(static_cast<Eigen::Index>(r.rows.size()), 3);
  for (size_t i = 0; i < r.rows.size(); ++i) {
    m(i, 0) = r.rows[i].j;
    m(i, 1) = r.rows[i].param_distance;
    m(i, 2) = r.rows[i].output_distance;
  }
  write_csv(path, {"j", "param_distance", "output_distance"}, m);
}

void write_singular_values(const fs::path& path, const SvdProbeResult& r) {
  Mat m(r.singular_values.size(), 3);
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) {
    m(i, 0) = static_cast<double>(i + 1);
    m(i, 1) = r.singular_values(i);
    m(i, 2) = r.decay_ratios[i];
  }
  write_csv(path, {"k", "sigma", "ratio"}, m);
}

void write_history(const fs::path& path, const IterateHistory& h) {
  Mat m(static_cast<Eigen::Index>(h.records.size()), 5);
  for (size_t i = 0; i < h.records.size(); ++i) {
    const auto& r = h.records[i];
    m.row(i) << r.iteration, r.outer, r.residual, r.gradient_norm, r.accepted ? 1.0 : 0.0;
  }
  write_csv(path, {"iteration", "outer", "residual", "gradient_norm", "accepted"}, m);
}

std::string sha256_string(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  return hex(md, len);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) io_error("cannot read", path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  return hex(md, len);
}

void Manifest::add(const fs::path& file) { files_.push_back(file); }

void Manifest::add(const std::vector<fs::path>& files) {
  files_.insert(files_.end(), files.begin(), files.end());
}

fs::path Manifest::write(json meta) const {
  json arts = json::array();
  for (const auto& f : files_) {
    arts.push_back({{"path", fs::relative(f, root_).generic_string()},
                    {"sha256", sha256_file(f)},
                    {"bytes", fs::file_size(f)}});
  }
  meta["artifacts"] = arts;
  const fs::path p = root_ / "manifest.json";
  write_json(p, meta);
  return p;
}

}  // namespace hyperinv::io
