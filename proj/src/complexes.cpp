#include "bvq/complexes.hpp"

namespace bvq {

HScalar exact_divide(const HScalar& a, const HScalar& b) {
  if (b.is_zero()) throw std::domain_error("exact_divide: division by zero");
  if (a.is_zero()) return {};
  const int db = b.degree();
  const GaussianRational lead = b.coeff(db);
  HScalar rem = a;
  HScalar quot;
  while (!rem.is_zero() && rem.degree() >= db) {
    const int k = rem.degree() - db;
    HScalar term = HScalar::monomial(rem.coeff(rem.degree()) / lead, k);
    quot += term;
    rem -= term * b;
  }
  if (!rem.is_zero()) throw std::domain_error("exact_divide: inexact quotient");
  return quot;
}

std::size_t rank_fraction_free(std::vector<std::vector<HScalar>>& m) {
  const std::size_t rows = m.size();
  if (rows == 0) return 0;
  const std::size_t cols = m[0].size();
  HScalar prev(1);
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t pivot = r;
    while (pivot < rows && m[pivot][c].is_zero()) ++pivot;
    if (pivot == rows) continue;
    std::swap(m[pivot], m[r]);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        m[i][j] = exact_divide(m[r][c] * m[i][j] - m[i][c] * m[r][j], prev);
      }
      m[i][c] = HScalar();
    }
    prev = m[r][c];
    ++r;
  }
  return r;
}

}  // namespace bvq
