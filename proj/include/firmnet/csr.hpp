#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "firmnet/errors.hpp"

namespace firmnet {

using FirmIndex = std::uint32_t;

struct Edge {
  FirmIndex src = 0;
  FirmIndex dst = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Binary directed adjacency in compressed-row form, column indices sorted
// within each row.  The transpose is materialized at construction so both
// A*x and A'*x stream row-major.  Immutable after construction.
class CsrMatrix {
public:
  CsrMatrix() = default;

  // Edges may arrive unsorted; duplicates and self-loops must have been
  // handled by the caller (construction asserts the invariants instead).
  CsrMatrix(FirmIndex n, std::vector<Edge> edges) : n_(n) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (const Edge& e : edges) {
      if (e.src >= n || e.dst >= n) throw DimensionError("edge index out of range");
      if (e.src == e.dst) throw DataError("self-loop in adjacency construction");
    }
    build(edges, row_ptr_, col_);
    std::vector<Edge> rev(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) rev[k] = {edges[k].dst, edges[k].src};
    std::sort(rev.begin(), rev.end());
    build(rev, t_row_ptr_, t_col_);
  }

  FirmIndex rows() const { return n_; }
  std::size_t nnz() const { return col_.size(); }

  std::span<const FirmIndex> row(FirmIndex i) const {
    return {col_.data() + row_ptr_[i], col_.data() + row_ptr_[i + 1]};
  }
  std::span<const FirmIndex> col_of_transpose(FirmIndex i) const {
    return {t_col_.data() + t_row_ptr_[i], t_col_.data() + t_row_ptr_[i + 1]};
  }

  std::size_t out_degree(FirmIndex i) const { return row_ptr_[i + 1] - row_ptr_[i]; }
  std::size_t in_degree(FirmIndex i) const { return t_row_ptr_[i + 1] - t_row_ptr_[i]; }
  std::size_t max_out_degree() const {
    std::size_t m = 0;
    for (FirmIndex i = 0; i < n_; ++i) m = std::max(m, out_degree(i));
    return m;
  }

  bool has_edge(FirmIndex src, FirmIndex dst) const {
    auto r = row(src);
    return std::binary_search(r.begin(), r.end(), dst);
  }

  std::vector<Edge> edge_list() const {
    std::vector<Edge> out;
    out.reserve(nnz());
    for (FirmIndex i = 0; i < n_; ++i)
      for (FirmIndex j : row(i)) out.push_back({i, j});
    return out;
  }

  const std::vector<std::uint32_t>& row_ptr() const { return row_ptr_; }
  const std::vector<FirmIndex>& col_idx() const { return col_; }

  friend bool operator==(const CsrMatrix& a, const CsrMatrix& b) {
    return a.n_ == b.n_ && a.row_ptr_ == b.row_ptr_ && a.col_ == b.col_;
  }

private:
  void build(const std::vector<Edge>& sorted, std::vector<std::uint32_t>& rp,
             std::vector<FirmIndex>& cl) {
    rp.assign(n_ + 1, 0);
    cl.resize(sorted.size());
    for (const Edge& e : sorted) ++rp[e.src + 1];
    for (FirmIndex i = 0; i < n_; ++i) rp[i + 1] += rp[i];
    for (std::size_t k = 0; k < sorted.size(); ++k) cl[k] = sorted[k].dst;
  }

  FirmIndex n_ = 0;
  std::vector<std::uint32_t> row_ptr_, t_row_ptr_;
  std::vector<FirmIndex> col_, t_col_;
};

// y += c * A * x.  Row accumulation is strictly left-to-right in column
// order, so results are bit-reproducible independent of threading.
inline void spmv_add(const CsrMatrix& a, double c, std::span<const double> x,
                     std::span<double> y) {
  if (x.size() != a.rows() || y.size() != a.rows())
    throw DimensionError("spmv: vector length does not match matrix dimension");
  const auto n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static) if (n > 16384)
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (FirmIndex j : a.row(static_cast<FirmIndex>(i))) acc += x[j];
    y[static_cast<std::size_t>(i)] += c * acc;
  }
}

inline std::vector<double> spmv(const CsrMatrix& a, double c, std::span<const double> x) {
  std::vector<double> y(a.rows(), 0.0);
  spmv_add(a, c, x, y);
  return y;
}

// y += c * A' * x, streamed over the materialized transpose.
inline void spmv_transpose_add(const CsrMatrix& a, double c, std::span<const double> x,
                               std::span<double> y) {
  if (x.size() != a.rows() || y.size() != a.rows())
    throw DimensionError("spmv_transpose: vector length does not match matrix dimension");
  const auto n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static) if (n > 16384)
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (FirmIndex j : a.col_of_transpose(static_cast<FirmIndex>(i))) acc += x[j];
    y[static_cast<std::size_t>(i)] += c * acc;
  }
}

}  // namespace firmnet
