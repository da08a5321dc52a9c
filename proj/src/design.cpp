#include <algorithm>
#include <cmath>
#include <string>

#include "sprinter/lasso.hpp"
#include "sprinter/parallel.hpp"
#include "sprinter/simd/kernels.hpp"

namespace sprinter::lasso {

namespace {

// Rewrites x in place as (x - mean) / sd, or zeros for a constant column.
ColumnStats standardize_in_place(std::span<double> x) {
  const ColumnStats s = column_stats(x);
  if (degenerate_variance(s.sd * s.sd, s.mean)) {
    std::fill(x.begin(), x.end(), 0.0);
  } else {
    const double inv = 1.0 / s.sd;
    for (double& v : x) v = (v - s.mean) * inv;
  }
  return s;
}

bool is_constant(const ColumnStats& s) { return degenerate_variance(s.sd * s.sd, s.mean); }

constexpr std::size_t kPairBlock = simd::kMaxMultiDot;

}  // namespace

// ---------------------------------------------------------------------------
// DenseDesign

DenseDesign::DenseDesign(std::size_t rows, std::size_t cols,
                         const std::function<void(std::size_t, std::span<double>)>& fill)
    : n_(rows), stats_(cols), values_(rows * cols) {
  if (rows == 0) throw InputError("design: no rows");
  for (std::size_t c = 0; c < cols; ++c) {
    std::span<double> col(values_.data() + c * n_, n_);
    fill(c, col);
    for (double v : col) {
      if (!std::isfinite(v)) throw InputError("design: non-finite value in column " + std::to_string(c));
    }
    stats_[c] = standardize_in_place(col);
  }
}

DenseDesign DenseDesign::from_columns(std::span<const std::vector<double>> columns) {
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (const auto& col : columns) {
    if (col.size() != n) throw InputError("design: columns have different lengths");
  }
  return DenseDesign(n, columns.size(), [&](std::size_t c, std::span<double> out) {
    std::copy(columns[c].begin(), columns[c].end(), out.begin());
  });
}

void DenseDesign::gradient(std::span<const double> v, std::span<double> out) const {
  const auto& k = simd::active();
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t c = 0; c < stats_.size(); ++c) {
    out[c] = k.dot(values_.data() + c * n_, v.data(), n_) * inv_n;
  }
}

std::span<const double> DenseDesign::standardized(std::size_t c, std::vector<double>&) const {
  if (c >= stats_.size()) throw IndexError("design: column out of range");
  return {values_.data() + c * n_, n_};
}

// ---------------------------------------------------------------------------
// AllPairsDesign

AllPairsDesign::AllPairsDesign(Dataset data, std::size_t threads)
    : data_(std::move(data)), tau_(data_.p()), threads_(resolve_threads(threads)) {
  const std::size_t n = data_.n();
  const std::size_t p = data_.p();
  squares_.resize(n * p);
  const auto& k = simd::active();
  for (std::size_t j = 0; j < p; ++j) {
    const double* x = data_.x().data() + j * n;
    k.hadamard(x, x, squares_.data() + j * n, n);
  }
  stats_.resize(p + tau_.q());
  for (std::size_t j = 0; j < p; ++j) stats_[j] = data_.stats(j);
  parallel_for(p, threads_, [&](std::size_t j) {
    std::vector<double> z(n);
    const double* xj = data_.x().data() + j * n;
    for (std::size_t kk = j; kk < p; ++kk) {
      simd::active().hadamard(xj, data_.x().data() + kk * n, z.data(), n);
      stats_[p + tau_(j, kk)] = column_stats(z);
    }
  });
}

void AllPairsDesign::gradient(std::span<const double> v, std::span<double> out) const {
  const std::size_t n = data_.n();
  const std::size_t p = data_.p();
  const auto& kern = simd::active();
  double sum_v = 0.0;
  for (double x : v) sum_v += x;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double* x = data_.x().data();

  auto finish = [&](std::size_t c, double raw_dot) {
    const ColumnStats& s = stats_[c];
    out[c] = is_constant(s) ? 0.0 : (raw_dot - s.mean * sum_v) * inv_n / s.sd;
  };

  for (std::size_t j = 0; j < p; ++j) finish(j, kern.dot(x + j * n, v.data(), n));

  const std::size_t blocks = (p + kPairBlock - 1) / kPairBlock;
  parallel_for(blocks, threads_, [&](std::size_t b) {
    const std::size_t j0 = b * kPairBlock;
    const std::size_t count = std::min(kPairBlock, p - j0);
    std::vector<double> u(count * n);
    const double* lefts[kPairBlock];
    for (std::size_t t = 0; t < count; ++t) {
      kern.hadamard(x + (j0 + t) * n, v.data(), u.data() + t * n, n);
      lefts[t] = u.data() + t * n;
    }
    double dots[kPairBlock];
    for (std::size_t k = j0; k < p; ++k) {
      kern.multi_dot(lefts, count, x + k * n, n, dots);
      for (std::size_t t = 0; t < count && j0 + t <= k; ++t) {
        finish(p + tau_(j0 + t, k), dots[t]);
      }
    }
  });
}

std::span<const double> AllPairsDesign::standardized(std::size_t c, std::vector<double>& scratch) const {
  const std::size_t n = data_.n();
  const std::size_t p = data_.p();
  if (c >= stats_.size()) throw IndexError("design: column out of range");
  scratch.resize(n);
  if (c < p) {
    const auto col = data_.column(c);
    std::copy(col.begin(), col.end(), scratch.begin());
  } else {
    const auto [j, k] = tau_.inverse(c - p);
    interaction_column(data_, j, k, scratch);
  }
  const ColumnStats& s = stats_[c];
  if (is_constant(s)) {
    std::fill(scratch.begin(), scratch.end(), 0.0);
  } else {
    const double inv = 1.0 / s.sd;
    for (double& v : scratch) v = (v - s.mean) * inv;
  }
  return scratch;
}

// ---------------------------------------------------------------------------
// Column sources

namespace {

std::size_t row_count(std::span<const std::size_t> rows, std::size_t n) {
  return rows.empty() ? n : rows.size();
}

std::size_t row_at(std::span<const std::size_t> rows, std::size_t i) {
  return rows.empty() ? i : rows[i];
}

}  // namespace

RawColumns::RawColumns(std::vector<std::vector<double>> columns) : columns_(std::move(columns)) {
  n_ = columns_.empty() ? 0 : columns_.front().size();
  for (const auto& col : columns_) {
    if (col.size() != n_) throw InputError("design: columns have different lengths");
  }
}

void RawColumns::column(std::size_t c, std::span<const std::size_t> rows, std::span<double> out) const {
  const auto& col = columns_.at(c);
  const std::size_t m = row_count(rows, n_);
  for (std::size_t i = 0; i < m; ++i) out[i] = col.at(row_at(rows, i));
}

std::unique_ptr<Design> RawColumns::design(std::span<const std::size_t> rows) const {
  return std::make_unique<DenseDesign>(row_count(rows, n_), cols(),
                                       [&](std::size_t c, std::span<double> out) { column(c, rows, out); });
}

TermColumns::TermColumns(const Dataset& data, std::vector<Term> terms) : data_(&data), terms_(std::move(terms)) {
  for (const Term& t : terms_) {
    if (t.j >= data.p() || (t.is_pair() && t.k >= data.p())) {
      throw IndexError("design: term " + to_string(t) + " out of range for p=" + std::to_string(data.p()));
    }
  }
}

void TermColumns::column(std::size_t c, std::span<const std::size_t> rows, std::span<double> out) const {
  const Term& t = terms_.at(c);
  const std::size_t m = row_count(rows, data_->n());
  const auto xj = data_->column(t.j);
  if (t.is_main()) {
    for (std::size_t i = 0; i < m; ++i) out[i] = xj[row_at(rows, i)];
  } else {
    const auto xk = data_->column(t.k);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t r = row_at(rows, i);
      out[i] = xj[r] * xk[r];
    }
  }
}

std::unique_ptr<Design> TermColumns::design(std::span<const std::size_t> rows) const {
  return std::make_unique<DenseDesign>(row_count(rows, data_->n()), cols(),
                                       [&](std::size_t c, std::span<double> out) { column(c, rows, out); });
}

AllPairsColumns::AllPairsColumns(const Dataset& data, std::size_t materialize_budget_bytes, std::size_t threads)
    : data_(&data), tau_(data.p()), budget_(materialize_budget_bytes), threads_(threads) {}

Term AllPairsColumns::term(std::size_t c) const {
  if (c < data_->p()) return Term::main(c);
  const auto [j, k] = tau_.inverse(c - data_->p());
  return Term::pair(j, k);
}

bool AllPairsColumns::streams(std::size_t n_rows) const noexcept {
  const long double bytes = static_cast<long double>(n_rows) * static_cast<long double>(cols()) * sizeof(double);
  return bytes > static_cast<long double>(budget_);
}

void AllPairsColumns::column(std::size_t c, std::span<const std::size_t> rows, std::span<double> out) const {
  const Term t = term(c);
  const std::size_t m = row_count(rows, data_->n());
  const auto xj = data_->column(t.j);
  if (t.is_main()) {
    for (std::size_t i = 0; i < m; ++i) out[i] = xj[row_at(rows, i)];
  } else {
    const auto xk = data_->column(t.k);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t r = row_at(rows, i);
      out[i] = xj[r] * xk[r];
    }
  }
}

std::unique_ptr<Design> AllPairsColumns::design(std::span<const std::size_t> rows) const {
  const std::size_t m = row_count(rows, data_->n());
  if (streams(m)) {
    return std::make_unique<AllPairsDesign>(rows.empty() ? *data_ : data_->subset_rows(rows), threads_);
  }
  return std::make_unique<DenseDesign>(m, cols(), [&](std::size_t c, std::span<double> out) { column(c, rows, out); });
}

}  // namespace sprinter::lasso
