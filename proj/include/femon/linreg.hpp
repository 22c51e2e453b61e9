#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace femon {

/// Ordinary least squares via normal equations and a Cholesky solve.
/// `columns` holds the design matrix column by column; all columns must
/// have the same length as `y`.  Throws on rank deficiency.
inline std::vector<double> ols_solve(const std::vector<std::vector<double>>& columns,
                                     const std::vector<double>& y) {
    const std::size_t p = columns.size();
    const std::size_t n = y.size();
    if (p == 0) throw std::invalid_argument("ols_solve: empty design matrix");
    if (n < p) throw std::invalid_argument("ols_solve: fewer observations than parameters");
    for (const auto& col : columns)
        if (col.size() != n) throw std::invalid_argument("ols_solve: column length mismatch");

    // Gram matrix X'X (symmetric) and X'y.
    std::vector<double> gram(p * p, 0.0), xty(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += columns[i][t] * columns[j][t];
            gram[i * p + j] = gram[j * p + i] = s;
        }
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t) s += columns[i][t] * y[t];
        xty[i] = s;
    }

    // Cholesky factorization gram = L L'.
    std::vector<double> lower(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = gram[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= lower[i * p + k] * lower[j * p + k];
            if (i == j) {
                if (s <= 1e-10)
                    throw std::invalid_argument("ols_solve: design matrix is rank deficient");
                lower[i * p + i] = std::sqrt(s);
            } else {
                lower[i * p + j] = s / lower[j * p + j];
            }
        }
    }

    // Forward then backward substitution.
    std::vector<double> z(p, 0.0), beta(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        double s = xty[i];
        for (std::size_t k = 0; k < i; ++k) s -= lower[i * p + k] * z[k];
        z[i] = s / lower[i * p + i];
    }
    for (std::size_t ii = p; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t k = ii + 1; k < p; ++k) s -= lower[k * p + ii] * beta[k];
        beta[ii] = s / lower[ii * p + ii];
    }
    return beta;
}

}  // namespace femon
