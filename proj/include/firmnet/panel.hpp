#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "firmnet/csr.hpp"
#include "firmnet/errors.hpp"

namespace firmnet {

// External firm identifiers are mapped once to dense indices at ingestion;
// the mapping travels with the panel.
class FirmRegistry {
public:
  FirmRegistry() = default;
  explicit FirmRegistry(std::vector<std::string> ids) : ids_(std::move(ids)) {
    for (FirmIndex i = 0; i < ids_.size(); ++i) {
      auto [it, inserted] = index_.emplace(ids_[i], i);
      if (!inserted) throw DataError("duplicate firm id in registry: " + ids_[i]);
    }
  }

  FirmIndex size() const { return static_cast<FirmIndex>(ids_.size()); }
  const std::string& id(FirmIndex i) const { return ids_.at(i); }
  const std::vector<std::string>& ids() const { return ids_; }

  std::optional<FirmIndex> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  FirmIndex require(const std::string& id) const {
    auto idx = find(id);
    if (!idx) throw DataError("unknown firm id: " + id);
    return *idx;
  }

  friend bool operator==(const FirmRegistry& a, const FirmRegistry& b) {
    return a.ids_ == b.ids_;
  }

private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, FirmIndex> index_;
};

enum class Relation { G, H };

// One year's pair of adjacency structures.  G holds reported buyers
// (downstream), H reported suppliers (upstream); the two are observed
// independently and H is never assumed to be G transposed.
struct NetworkSnapshot {
  CsrMatrix G;
  CsrMatrix H;
};

class PanelNetwork {
public:
  PanelNetwork() = default;
  PanelNetwork(FirmRegistry registry, std::vector<int> years,
               std::vector<NetworkSnapshot> snapshots)
      : registry_(std::move(registry)), years_(std::move(years)),
        snapshots_(std::move(snapshots)) {
    if (years_.size() != snapshots_.size())
      throw DimensionError("panel: years and snapshots differ in length");
    if (!std::is_sorted(years_.begin(), years_.end()) ||
        std::adjacent_find(years_.begin(), years_.end()) != years_.end())
      throw DataError("panel: year labels must be strictly increasing");
    for (const auto& s : snapshots_)
      if (s.G.rows() != firm_count() || s.H.rows() != firm_count())
        throw DimensionError("panel: snapshot dimension does not match firm count");
  }

  FirmIndex firm_count() const { return registry_.size(); }
  const FirmRegistry& registry() const { return registry_; }
  const std::vector<int>& years() const { return years_; }
  std::size_t year_count() const { return years_.size(); }

  bool has_year(int year) const {
    return std::binary_search(years_.begin(), years_.end(), year);
  }
  std::size_t year_index(int year) const {
    auto it = std::lower_bound(years_.begin(), years_.end(), year);
    if (it == years_.end() || *it != year)
      throw DataError("panel: year " + std::to_string(year) + " not present");
    return static_cast<std::size_t>(it - years_.begin());
  }

  const NetworkSnapshot& snapshot(int year) const { return snapshots_[year_index(year)]; }
  const NetworkSnapshot& snapshot_at(std::size_t idx) const { return snapshots_.at(idx); }

private:
  FirmRegistry registry_;
  std::vector<int> years_;
  std::vector<NetworkSnapshot> snapshots_;
};

// Per-year log growth rate vectors; z carries the latent noiseless series
// when the panel came out of the synthetic generator.
class GrowthPanel {
public:
  GrowthPanel() = default;
  GrowthPanel(FirmIndex firm_count, std::vector<int> years,
              std::vector<std::vector<double>> y,
              std::vector<std::vector<double>> z = {})
      : firm_count_(firm_count), years_(std::move(years)), y_(std::move(y)),
        z_(std::move(z)) {
    if (years_.size() != y_.size())
      throw DimensionError("growth panel: years and vectors differ in length");
    if (!z_.empty() && z_.size() != y_.size())
      throw DimensionError("growth panel: latent series length mismatch");
    for (const auto& v : y_) check_vector(v);
    for (const auto& v : z_) check_vector(v);
  }

  FirmIndex firm_count() const { return firm_count_; }
  const std::vector<int>& years() const { return years_; }
  bool has_year(int year) const {
    return std::binary_search(years_.begin(), years_.end(), year);
  }
  std::size_t year_index(int year) const {
    auto it = std::lower_bound(years_.begin(), years_.end(), year);
    if (it == years_.end() || *it != year)
      throw DataError("growth panel: year " + std::to_string(year) + " not present");
    return static_cast<std::size_t>(it - years_.begin());
  }

  const std::vector<double>& y(int year) const { return y_[year_index(year)]; }
  const std::vector<double>& y_at(std::size_t idx) const { return y_.at(idx); }
  bool has_latent() const { return !z_.empty(); }
  const std::vector<double>& z(int year) const {
    if (!has_latent()) throw DataError("growth panel: no latent series");
    return z_[year_index(year)];
  }

  // A copy whose observed series is the latent one; used by the
  // measurement-error experiment's no-error run.
  GrowthPanel latent_view() const {
    if (!has_latent()) throw DataError("growth panel: no latent series");
    return GrowthPanel(firm_count_, years_, z_);
  }

private:
  void check_vector(const std::vector<double>& v) const {
    if (v.size() != firm_count_)
      throw DimensionError("growth panel: vector length does not match firm count");
    for (double x : v)
      if (!std::isfinite(x)) throw DataError("growth panel: non-finite growth value");
  }

  FirmIndex firm_count_ = 0;
  std::vector<int> years_;
  std::vector<std::vector<double>> y_;
  std::vector<std::vector<double>> z_;
};

struct ShockVector {
  int year = 0;
  std::vector<double> e;
};

}  // namespace firmnet
