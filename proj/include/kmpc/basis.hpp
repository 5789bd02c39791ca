#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmpc/types.hpp"

namespace kmpc {

/// Count of monomials of total degree <= max_degree in q variables,
/// constant term included: C(q + max_degree, max_degree).
inline std::uint64_t monomial_count(int q, int max_degree) {
    if (q < 1) {
        throw std::invalid_argument("monomial_count: q must be >= 1");
    }
    if (max_degree < 0) {
        throw std::invalid_argument("monomial_count: max_degree must be >= 0");
    }
    constexpr unsigned __int128 limit = std::numeric_limits<std::int64_t>::max();
    unsigned __int128 r = 1;
    for (int i = 1; i <= max_degree; ++i) {
        r = r * static_cast<unsigned __int128>(static_cast<std::int64_t>(q) + i) /
            static_cast<unsigned __int128>(i);
        if (r > limit) {
            throw std::overflow_error("monomial_count: binomial coefficient overflows 64 bits (q=" +
                                      std::to_string(q) + ", max_degree=" + std::to_string(max_degree) + ")");
        }
    }
    return static_cast<std::uint64_t>(r);
}

/// Monomial dictionary over a q-dimensional (delay-embedded) vector.
///
/// Canonical ordering: the q coordinate monomials first (so the lifted
/// vector starts with the embedded vector itself and the output matrix
/// [I 0] is a valid projection), then the constant monomial, then total
/// degrees 2..max_degree in graded lexicographic order.
class MonomialBasis {
public:
    MonomialBasis(int embedded_dim, int max_degree)
        : q_(embedded_dim), max_degree_(max_degree) {
        if (q_ < 1) {
            throw std::invalid_argument("MonomialBasis: embedded_dim must be >= 1");
        }
        if (max_degree_ < 1) {
            throw std::invalid_argument("MonomialBasis: max_degree must be >= 1");
        }
        const std::uint64_t n = monomial_count(q_, max_degree_);

        exponents_.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < q_; ++i) {
            std::vector<int> e(static_cast<std::size_t>(q_), 0);
            e[static_cast<std::size_t>(i)] = 1;
            exponents_.push_back(std::move(e));
        }
        exponents_.emplace_back(static_cast<std::size_t>(q_), 0);  // constant
        std::vector<int> scratch(static_cast<std::size_t>(q_), 0);
        for (int degree = 2; degree <= max_degree_; ++degree) {
            append_degree(degree, 0, scratch);
        }
    }

    int embedded_dim() const { return q_; }
    int max_degree() const { return max_degree_; }
    Index size() const { return static_cast<Index>(exponents_.size()); }

    /// Exponent tuples in canonical order; row i holds the exponents of
    /// basis function i.
    const std::vector<std::vector<int>>& exponents() const { return exponents_; }

    /// Evaluates the lifting function: psi(xi) in canonical order.
    /// The first q entries equal xi exactly.
    Vec lift(const Eigen::Ref<const Vec>& xi) const {
        if (xi.size() != q_) {
            throw std::invalid_argument("MonomialBasis::lift: expected dimension " +
                                        std::to_string(q_) + ", got " + std::to_string(xi.size()));
        }
        // Power table: powers(i, d) = xi[i]^d.
        Mat powers(q_, max_degree_ + 1);
        for (int i = 0; i < q_; ++i) {
            powers(i, 0) = 1.0;
            for (int d = 1; d <= max_degree_; ++d) {
                powers(i, d) = powers(i, d - 1) * xi[i];
            }
        }
        Vec out(size());
        out.head(q_) = xi;
        for (std::size_t j = static_cast<std::size_t>(q_); j < exponents_.size(); ++j) {
            double v = 1.0;
            const auto& e = exponents_[j];
            for (int i = 0; i < q_; ++i) {
                if (e[static_cast<std::size_t>(i)] != 0) {
                    v *= powers(i, e[static_cast<std::size_t>(i)]);
                }
            }
            out[static_cast<Index>(j)] = v;
        }
        return out;
    }

private:
    // Exponent tuples of total degree exactly `remaining`, appended in
    // lexicographic-descending order (x1^g first, xq^g last).
    void append_degree(int remaining, int var, std::vector<int>& scratch) {
        if (var == q_ - 1) {
            scratch[static_cast<std::size_t>(var)] = remaining;
            exponents_.push_back(scratch);
            scratch[static_cast<std::size_t>(var)] = 0;
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            scratch[static_cast<std::size_t>(var)] = e;
            append_degree(remaining - e, var + 1, scratch);
        }
        scratch[static_cast<std::size_t>(var)] = 0;
    }

    int q_;
    int max_degree_;
    std::vector<std::vector<int>> exponents_;
};

}  // namespace kmpc
