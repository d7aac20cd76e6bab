#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "firmnet/counterfactual.hpp"
#include "firmnet/estimation.hpp"
#include "firmnet/network_stats.hpp"
#include "firmnet/panel.hpp"
#include "firmnet/params.hpp"

namespace firmnet::io {

// ---------------------------------------------------------------------------
// Shared plumbing.  CSV here is the plain comma-separated dialect: no quoting
// or embedded commas, one header row, records terminated by newline.  Doubles
// are emitted with 17 significant digits so text round trips are exact.

namespace detail {

// Shortest representation that parses back to the identical double.
inline std::string fmt(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return fields;
}

inline int parse_int(std::string_view s, std::size_t line_no, const char* what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(std::string("expected integer ") + what + ", got '" +
                         std::string(s) + "'",
                     line_no);
  return value;
}

inline double parse_double(std::string_view s, std::size_t line_no, const char* what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(std::string("expected number ") + what + ", got '" + std::string(s) +
                         "'",
                     line_no);
  return value;
}

inline void expect_header(std::istream& in, std::string_view expected,
                          const char* what) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(std::string(what) + ": empty input", 1);
  if (trim(line) != expected)
    throw ParseError(std::string(what) + ": expected header '" + std::string(expected) +
                         "'",
                     1);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Firm registry: header `firm`, one identifier per row, row order defines
// the dense index.

inline FirmRegistry read_firm_registry(std::istream& in) {
  detail::expect_header(in, "firm", "firm registry");
  std::vector<std::string> ids;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    if (t.find(',') != std::string_view::npos)
      throw ParseError("firm registry: unexpected extra column", line_no);
    ids.emplace_back(t);
  }
  if (ids.empty()) throw DataError("firm registry: no firms listed");
  return FirmRegistry(std::move(ids));
}

inline void write_firm_registry(const FirmRegistry& registry, std::ostream& out) {
  out << "firm\n";
  for (const std::string& id : registry.ids()) out << id << "\n";
}

// ---------------------------------------------------------------------------
// Edge lists: header `year,source,target,relation`.  Self-loops are dropped
// and duplicates collapsed, both with counts surfaced to the caller;
// malformed rows and unknown firms abort the load.

struct PanelLoadReport {
  std::size_t duplicate_edges = 0;
  std::size_t self_loops = 0;
};

struct LoadedPanel {
  PanelNetwork panel;
  PanelLoadReport report;
};

inline LoadedPanel load_panel(std::istream& in, const FirmRegistry& registry) {
  detail::expect_header(in, "year,source,target,relation", "edge list");
  std::map<int, std::pair<std::vector<Edge>, std::vector<Edge>>> by_year;
  PanelLoadReport report;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    auto fields = detail::split_csv(t);
    if (fields.size() != 4)
      throw ParseError("edge list: expected 4 fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    int year = detail::parse_int(fields[0], line_no, "for year");
    FirmIndex src = registry.require(std::string(fields[1]));
    FirmIndex dst = registry.require(std::string(fields[2]));
    Relation rel;
    if (fields[3] == "G")
      rel = Relation::G;
    else if (fields[3] == "H")
      rel = Relation::H;
    else
      throw ParseError("edge list: relation must be G or H, got '" +
                           std::string(fields[3]) + "'",
                       line_no);
    if (src == dst) {
      ++report.self_loops;
      continue;
    }
    auto& bucket = by_year[year];
    (rel == Relation::G ? bucket.first : bucket.second).push_back({src, dst});
  }
  if (by_year.empty()) throw DataError("edge list: no edges");

  std::vector<int> years;
  std::vector<NetworkSnapshot> snapshots;
  for (auto& [year, buckets] : by_year) {
    for (auto* edges : {&buckets.first, &buckets.second}) {
      std::sort(edges->begin(), edges->end());
      auto last = std::unique(edges->begin(), edges->end());
      report.duplicate_edges += static_cast<std::size_t>(edges->end() - last);
      edges->erase(last, edges->end());
    }
    years.push_back(year);
    snapshots.push_back({CsrMatrix(registry.size(), std::move(buckets.first)),
                         CsrMatrix(registry.size(), std::move(buckets.second))});
  }
  return {PanelNetwork(registry, std::move(years), std::move(snapshots)), report};
}

inline void write_edge_list(const PanelNetwork& panel, std::ostream& out) {
  out << "year,source,target,relation\n";
  const FirmRegistry& reg = panel.registry();
  for (std::size_t t = 0; t < panel.year_count(); ++t) {
    int year = panel.years()[t];
    const NetworkSnapshot& snap = panel.snapshot_at(t);
    for (auto [matrix, tag] : {std::pair{&snap.G, "G"}, std::pair{&snap.H, "H"}}) {
      for (FirmIndex i = 0; i < matrix->rows(); ++i)
        for (FirmIndex j : matrix->row(i))
          out << year << ',' << reg.id(i) << ',' << reg.id(j) << ',' << tag << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Growth panels: header `year,firm,log_growth`.  Every listed year must
// cover the full registry (the estimator assumes a balanced panel).

inline GrowthPanel read_growth(std::istream& in, const FirmRegistry& registry,
                               const char* value_header = "log_growth") {
  detail::expect_header(in, std::string("year,firm,") + value_header, "growth file");
  std::map<int, std::vector<double>> by_year;
  std::map<int, std::vector<bool>> seen;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    auto fields = detail::split_csv(t);
    if (fields.size() != 3)
      throw ParseError("growth file: expected 3 fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    int year = detail::parse_int(fields[0], line_no, "for year");
    FirmIndex firm = registry.require(std::string(fields[1]));
    double value = detail::parse_double(fields[2], line_no, "for growth");
    auto [it, inserted] = by_year.try_emplace(year, registry.size(), 0.0);
    auto [sit, sinserted] = seen.try_emplace(year, registry.size(), false);
    if (sit->second[firm])
      throw ParseError("growth file: duplicate entry for firm " + std::string(fields[1]),
                       line_no);
    it->second[firm] = value;
    sit->second[firm] = true;
  }
  if (by_year.empty()) throw DataError("growth file: no observations");
  std::vector<int> years;
  std::vector<std::vector<double>> y;
  for (auto& [year, values] : by_year) {
    const auto& mask = seen[year];
    std::size_t missing = 0;
    for (bool b : mask) missing += b ? 0 : 1;
    if (missing > 0)
      throw DataError("growth file: year " + std::to_string(year) + " missing " +
                      std::to_string(missing) + " firms");
    years.push_back(year);
    y.push_back(std::move(values));
  }
  return GrowthPanel(registry.size(), std::move(years), std::move(y));
}

inline void write_growth(const GrowthPanel& growth, const FirmRegistry& registry,
                         std::ostream& out, bool latent = false,
                         const char* value_header = "log_growth") {
  out << "year,firm," << value_header << "\n";
  for (std::size_t t = 0; t < growth.years().size(); ++t) {
    int year = growth.years()[t];
    const std::vector<double>& v = latent ? growth.z(year) : growth.y_at(t);
    for (FirmIndex i = 0; i < growth.firm_count(); ++i)
      out << year << ',' << registry.id(i) << ',' << detail::fmt(v[i]) << "\n";
  }
}

// Shock vectors reuse the growth layout with a `shock` value column.
inline void write_shocks(const std::vector<ShockVector>& shocks,
                         const FirmRegistry& registry, std::ostream& out) {
  out << "year,firm,shock\n";
  for (const ShockVector& s : shocks)
    for (FirmIndex i = 0; i < s.e.size(); ++i)
      out << s.year << ',' << registry.id(i) << ',' << detail::fmt(s.e[i]) << "\n";
}

// ---------------------------------------------------------------------------
// Flat key-value files (parameters, priors): `key = value` per line, `#`
// starts a comment.  Unknown keys are rejected so typos cannot silently
// fall back to defaults.

namespace detail {

inline std::map<std::string, double> read_kv(std::istream& in, const char* what) {
  std::map<std::string, double> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = trim(line);
    if (auto hash = t.find('#'); hash != std::string_view::npos) t = trim(t.substr(0, hash));
    if (t.empty()) continue;
    std::size_t eq = t.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(std::string(what) + ": expected 'key = value'", line_no);
    std::string key(trim(t.substr(0, eq)));
    double value = parse_double(trim(t.substr(eq + 1)), line_no, "for value");
    if (!kv.emplace(key, value).second)
      throw ParseError(std::string(what) + ": duplicate key '" + key + "'", line_no);
  }
  return kv;
}

}  // namespace detail

inline StructuralParams read_params(std::istream& in) {
  auto kv = detail::read_kv(in, "parameter file");
  StructuralParams p;
  std::array<double, 7> a{};
  for (std::size_t k = 0; k < 7; ++k) {
    auto it = kv.find(std::string(StructuralParams::names[k]));
    if (it == kv.end())
      throw ConfigError("parameter file: missing key '" +
                        std::string(StructuralParams::names[k]) + "'");
    a[k] = it->second;
    kv.erase(it);
  }
  if (!kv.empty())
    throw ConfigError("parameter file: unknown key '" + kv.begin()->first + "'");
  p = StructuralParams::from_array(a);
  p.validate();
  return p;
}

inline void write_params(const StructuralParams& p, std::ostream& out) {
  auto a = p.as_array();
  for (std::size_t k = 0; k < 7; ++k)
    out << StructuralParams::names[k] << " = " << detail::fmt(a[k]) << "\n";
}

inline PriorSpec read_priors(std::istream& in) {
  auto kv = detail::read_kv(in, "prior file");
  PriorSpec spec;
  auto take = [&](const char* key, double& slot) {
    auto it = kv.find(key);
    if (it != kv.end()) {
      slot = it->second;
      kv.erase(it);
    }
  };
  NormalPrior* locs[6] = {&spec.beta_G, &spec.beta_H, &spec.beta_LG,
                          &spec.beta_LH, &spec.gamma,  &spec.mu0};
  for (std::size_t k = 0; k < 6; ++k) {
    std::string base(StructuralParams::names[k]);
    take((base + "_mean").c_str(), locs[k]->mean);
    take((base + "_var").c_str(), locs[k]->var);
  }
  take("sigma0_sq_shape", spec.sigma0_sq.shape);
  take("sigma0_sq_scale", spec.sigma0_sq.scale);
  if (!kv.empty())
    throw ConfigError("prior file: unknown key '" + kv.begin()->first + "'");
  spec.validate();
  return spec;
}

inline void write_priors(const PriorSpec& spec, std::ostream& out) {
  const NormalPrior* locs[6] = {&spec.beta_G, &spec.beta_H, &spec.beta_LG,
                                &spec.beta_LH, &spec.gamma,  &spec.mu0};
  for (std::size_t k = 0; k < 6; ++k) {
    out << StructuralParams::names[k] << "_mean = " << detail::fmt(locs[k]->mean) << "\n";
    out << StructuralParams::names[k] << "_var = " << detail::fmt(locs[k]->var) << "\n";
  }
  out << "sigma0_sq_shape = " << detail::fmt(spec.sigma0_sq.shape) << "\n";
  out << "sigma0_sq_scale = " << detail::fmt(spec.sigma0_sq.scale) << "\n";
}

// ---------------------------------------------------------------------------
// Binary panel container: registry, years, and per-year CSR structure in one
// little-endian file.  Round trips are bit-exact because CSR storage is
// already canonical (rows sorted, columns sorted, no duplicates).

namespace detail {

constexpr char kPanelMagic[8] = {'F', 'N', 'P', 'A', 'N', 'E', 'L', '1'};
constexpr std::uint32_t kEndianSentinel = 0x01020304u;
constexpr std::uint32_t kPanelVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError(std::string("panel container: truncated reading ") + what);
  return v;
}

inline void put_matrix(std::ostream& out, const CsrMatrix& m) {
  put<std::uint64_t>(out, m.nnz());
  for (std::uint32_t v : m.row_ptr()) put<std::uint32_t>(out, v);
  for (FirmIndex v : m.col_idx()) put<std::uint32_t>(out, v);
}

inline CsrMatrix get_matrix(std::istream& in, FirmIndex n) {
  auto nnz = get<std::uint64_t>(in, "edge count");
  std::vector<std::uint32_t> row_ptr(n + 1);
  for (auto& v : row_ptr) v = get<std::uint32_t>(in, "row pointer");
  std::vector<Edge> edges;
  edges.reserve(nnz);
  for (FirmIndex i = 0; i < n; ++i) {
    for (std::uint32_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      edges.push_back({i, get<std::uint32_t>(in, "column index")});
  }
  if (edges.size() != nnz) throw DataError("panel container: edge count mismatch");
  return CsrMatrix(n, std::move(edges));
}

}  // namespace detail

inline void save_panel_binary(const PanelNetwork& panel, std::ostream& out) {
  out.write(detail::kPanelMagic, sizeof(detail::kPanelMagic));
  detail::put<std::uint32_t>(out, detail::kEndianSentinel);
  detail::put<std::uint32_t>(out, detail::kPanelVersion);
  detail::put<std::uint32_t>(out, panel.firm_count());
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(panel.year_count()));
  for (const std::string& id : panel.registry().ids()) {
    if (id.size() > 0xffff) throw DataError("panel container: firm id too long");
    detail::put<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  for (int year : panel.years()) detail::put<std::int32_t>(out, year);
  for (std::size_t t = 0; t < panel.year_count(); ++t) {
    detail::put_matrix(out, panel.snapshot_at(t).G);
    detail::put_matrix(out, panel.snapshot_at(t).H);
  }
  if (!out) throw DataError("panel container: write failed");
}

inline PanelNetwork load_panel_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kPanelMagic, sizeof(magic)) != 0)
    throw DataError("panel container: bad magic");
  if (detail::get<std::uint32_t>(in, "endian sentinel") != detail::kEndianSentinel)
    throw DataError("panel container: endianness mismatch");
  if (detail::get<std::uint32_t>(in, "version") != detail::kPanelVersion)
    throw DataError("panel container: unsupported version");
  FirmIndex n = detail::get<std::uint32_t>(in, "firm count");
  std::uint32_t year_count = detail::get<std::uint32_t>(in, "year count");
  std::vector<std::string> ids(n);
  for (FirmIndex i = 0; i < n; ++i) {
    auto len = detail::get<std::uint16_t>(in, "id length");
    ids[i].resize(len);
    in.read(ids[i].data(), len);
    if (!in) throw DataError("panel container: truncated firm id");
  }
  std::vector<int> years(year_count);
  for (auto& y : years) y = detail::get<std::int32_t>(in, "year");
  std::vector<NetworkSnapshot> snapshots;
  for (std::uint32_t t = 0; t < year_count; ++t) {
    CsrMatrix g = detail::get_matrix(in, n);
    CsrMatrix h = detail::get_matrix(in, n);
    snapshots.push_back({std::move(g), std::move(h)});
  }
  return PanelNetwork(FirmRegistry(std::move(ids)), std::move(years),
                      std::move(snapshots));
}

inline void save_panel_binary(const PanelNetwork& panel,
                              const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  save_panel_binary(panel, out);
}

inline PanelNetwork load_panel_binary(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return load_panel_binary(in);
}

// ---------------------------------------------------------------------------
// Posterior chain and summary tables.

inline void write_chain(const std::vector<StructuralParams>& samples, std::ostream& out) {
  out << "draw";
  for (auto name : StructuralParams::names) out << ',' << name;
  out << "\n";
  for (std::size_t s = 0; s < samples.size(); ++s) {
    out << s;
    for (double v : samples[s].as_array()) out << ',' << detail::fmt(v);
    out << "\n";
  }
}

inline std::vector<StructuralParams> read_chain(std::istream& in) {
  std::string header = "draw";
  for (auto name : StructuralParams::names) header += "," + std::string(name);
  detail::expect_header(in, header, "chain file");
  std::vector<StructuralParams> samples;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    auto fields = detail::split_csv(t);
    if (fields.size() != 8)
      throw ParseError("chain file: expected 8 fields", line_no);
    std::array<double, 7> a{};
    for (std::size_t k = 0; k < 7; ++k)
      a[k] = detail::parse_double(fields[k + 1], line_no, "for draw");
    samples.push_back(StructuralParams::from_array(a));
  }
  if (samples.empty()) throw DataError("chain file: no draws");
  return samples;
}

inline void write_summary(const ChainSummary& summary, std::ostream& out) {
  out << "parameter,mean,lower,upper,level\n";
  for (std::size_t k = 0; k < 7; ++k) {
    const ParamSummaryRow& r = summary.rows[k];
    out << StructuralParams::names[k] << ',' << detail::fmt(r.mean) << ','
        << detail::fmt(r.lower) << ',' << detail::fmt(r.upper) << ','
        << detail::fmt(summary.level) << "\n";
  }
}

inline void write_profile(const PropagationProfile& profile, std::ostream& out) {
  const char* sign = profile.sign == ShockSign::all        ? "all"
                     : profile.sign == ShockSign::positive ? "positive"
                                                           : "negative";
  out << "shock_year,network_year,sign,sd,mean,own_year\n";
  for (const ProfileCell& c : profile.cells)
    out << profile.shock_year << ',' << c.network_year << ',' << sign << ','
        << detail::fmt(c.sd) << ',' << detail::fmt(c.mean) << ','
        << (c.own_year ? 1 : 0) << "\n";
}

inline void write_decomposition(const AggregateDecomposition& d, std::ostream& out) {
  out << "year,mean_growth,mean_shock,mean_frozen,cum_growth,cum_shock,cum_frozen\n";
  for (std::size_t t = 0; t < d.years.size(); ++t)
    out << d.years[t] << ',' << detail::fmt(d.mean_growth[t]) << ','
        << detail::fmt(d.mean_shock[t]) << ',' << detail::fmt(d.mean_frozen[t]) << ','
        << detail::fmt(d.cum_growth[t]) << ',' << detail::fmt(d.cum_shock[t]) << ','
        << detail::fmt(d.cum_frozen[t]) << "\n";
}

inline void write_link_diff(const std::vector<LinkDiff>& diffs,
                            const FirmRegistry& registry, std::ostream& out) {
  out << "year,relation,event,source,target\n";
  for (const LinkDiff& d : diffs) {
    auto dump = [&](const std::vector<Edge>& edges, const char* rel, const char* event) {
      for (const Edge& e : edges)
        out << d.year << ',' << rel << ',' << event << ',' << registry.id(e.src) << ','
            << registry.id(e.dst) << "\n";
    };
    dump(d.formed_G, "G", "formed");
    dump(d.severed_G, "G", "severed");
    dump(d.formed_H, "H", "formed");
    dump(d.severed_H, "H", "severed");
  }
}

inline void write_neighbor_growth(const std::vector<NeighborGrowthStats>& stats,
                                  std::ostream& out) {
  out << "year,event,order,proportion_positive,proportion_negative,node_count\n";
  for (const NeighborGrowthStats& s : stats)
    out << s.year << ',' << (s.type == LinkEvent::formed ? "formed" : "severed") << ','
        << s.order << ',' << detail::fmt(s.proportion_positive) << ','
        << detail::fmt(s.proportion_negative) << ',' << s.node_count << "\n";
}

// ---------------------------------------------------------------------------
// Path overloads for the common readers/writers.

inline FirmRegistry read_firm_registry(const std::filesystem::path& p) {
  auto in = detail::open_input(p);
  return read_firm_registry(in);
}
inline LoadedPanel load_panel(const std::filesystem::path& p, const FirmRegistry& reg) {
  auto in = detail::open_input(p);
  return load_panel(in, reg);
}
inline GrowthPanel read_growth(const std::filesystem::path& p, const FirmRegistry& reg,
                               const char* value_header = "log_growth") {
  auto in = detail::open_input(p);
  return read_growth(in, reg, value_header);
}
inline StructuralParams read_params(const std::filesystem::path& p) {
  auto in = detail::open_input(p);
  return read_params(in);
}
inline PriorSpec read_priors(const std::filesystem::path& p) {
  auto in = detail::open_input(p);
  return read_priors(in);
}
inline std::vector<StructuralParams> read_chain(const std::filesystem::path& p) {
  auto in = detail::open_input(p);
  return read_chain(in);
}

}  // namespace firmnet::io
