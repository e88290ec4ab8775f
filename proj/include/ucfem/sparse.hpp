#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "error.hpp"

namespace ucfem {

using Vector = Eigen::VectorXd;

struct Triplet {
    int row;
    int col;
    double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing within a
/// row and no position is stored twice.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), offsets_(static_cast<std::size_t>(rows) + 1, 0) {}

    /// Duplicates are summed in input order, which keeps A(i,j) and A(j,i)
    /// bitwise equal whenever symmetric contributions arrive in the same order.
    static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
        UCFEM_THROW_IF(rows < 0 || cols < 0, InvalidArgument, "SparseMatrix: negative dimension");
        for (const auto& t : triplets)
            UCFEM_THROW_IF(t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols, InvalidArgument,
                           "SparseMatrix: triplet index out of range");
        std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        SparseMatrix m(rows, cols);
        for (std::size_t i = 0; i < triplets.size();) {
            const auto& t = triplets[i];
            double sum = 0.0;
            std::size_t j = i;
            for (; j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col; ++j)
                sum += triplets[j].value;
            m.cols_idx_.push_back(t.col);
            m.values_.push_back(sum);
            ++m.offsets_[static_cast<std::size_t>(t.row) + 1];
            i = j;
        }
        std::partial_sum(m.offsets_.begin(), m.offsets_.end(), m.offsets_.begin());
        return m;
    }

    static SparseMatrix identity(int n) {
        std::vector<Triplet> t;
        for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
        return from_triplets(n, n, std::move(t));
    }

    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }
    [[nodiscard]] std::size_t nnz() const { return values_.size(); }
    [[nodiscard]] const std::vector<int>& row_offsets() const { return offsets_; }
    [[nodiscard]] const std::vector<int>& col_indices() const { return cols_idx_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }

    [[nodiscard]] double coeff(int i, int j) const {
        const auto begin = cols_idx_.begin() + offsets_[static_cast<std::size_t>(i)];
        const auto end = cols_idx_.begin() + offsets_[static_cast<std::size_t>(i) + 1];
        const auto it = std::lower_bound(begin, end, j);
        return (it != end && *it == j) ? values_[static_cast<std::size_t>(it - cols_idx_.begin())] : 0.0;
    }

    template <typename F>
    void for_each(F&& f) const {
        for (int i = 0; i < rows_; ++i)
            for (int p = offsets_[static_cast<std::size_t>(i)]; p < offsets_[static_cast<std::size_t>(i) + 1]; ++p)
                f(i, cols_idx_[static_cast<std::size_t>(p)], values_[static_cast<std::size_t>(p)]);
    }

    [[nodiscard]] std::vector<Triplet> triplets() const {
        std::vector<Triplet> out;
        out.reserve(nnz());
        for_each([&](int i, int j, double v) { out.push_back({i, j, v}); });
        return out;
    }

    /// max |a_ij|
    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// max |a_ij - a_ji|; requires a square matrix.
    [[nodiscard]] double max_asymmetry() const {
        UCFEM_THROW_IF(rows_ != cols_, InvalidArgument, "max_asymmetry: matrix not square");
        double m = 0.0;
        for_each([&](int i, int j, double v) { m = std::max(m, std::abs(v - coeff(j, i))); });
        return m;
    }

    [[nodiscard]] SparseMatrix transpose() const {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for_each([&](int i, int j, double v) { t.push_back({j, i, v}); });
        return from_triplets(cols_, rows_, std::move(t));
    }

    [[nodiscard]] SparseMatrix scaled(double s) const {
        SparseMatrix out = *this;
        for (double& v : out.values_) v *= s;
        return out;
    }

    /// a*A + b*B on the union pattern.
    static SparseMatrix combine(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
        UCFEM_THROW_IF(A.rows_ != B.rows_ || A.cols_ != B.cols_, InvalidArgument, "combine: dimension mismatch");
        std::vector<Triplet> t;
        t.reserve(A.nnz() + B.nnz());
        A.for_each([&](int i, int j, double v) { t.push_back({i, j, a * v}); });
        B.for_each([&](int i, int j, double v) { t.push_back({i, j, b * v}); });
        return from_triplets(A.rows_, A.cols_, std::move(t));
    }

    friend SparseMatrix operator+(const SparseMatrix& A, const SparseMatrix& B) { return combine(1.0, A, 1.0, B); }

    [[nodiscard]] Eigen::SparseMatrix<double> to_eigen() const {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(nnz());
        for_each([&](int i, int j, double v) { t.emplace_back(i, j, v); });
        Eigen::SparseMatrix<double> m(rows_, cols_);
        m.setFromTriplets(t.begin(), t.end());
        return m;
    }

    /// Coordinate text `i j value`, one entry per line, sorted by (i, j).
    void write_coordinate(std::ostream& out) const {
        char buf[96];
        for_each([&](int i, int j, double v) {
            std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, j, v);
            out << buf;
        });
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> offsets_{0};
    std::vector<int> cols_idx_;
    std::vector<double> values_;
};

inline Vector make_vector(std::vector<double> values) {
    for (double v : values) UCFEM_THROW_IF(!std::isfinite(v), InvalidArgument, "Vector: non-finite entry");
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline Vector matvec(const SparseMatrix& A, const Vector& x) {
    UCFEM_THROW_IF(x.size() != A.cols(), InvalidArgument, "matvec: dimension mismatch");
    Vector y = Vector::Zero(A.rows());
    A.for_each([&](int i, int j, double v) { y[i] += v * x[j]; });
    return y;
}

inline Vector transpose_matvec(const SparseMatrix& A, const Vector& x) {
    UCFEM_THROW_IF(x.size() != A.rows(), InvalidArgument, "transpose_matvec: dimension mismatch");
    Vector y = Vector::Zero(A.cols());
    A.for_each([&](int i, int j, double v) { y[j] += v * x[i]; });
    return y;
}

/// x^T A y
inline double bilinear(const SparseMatrix& A, const Vector& x, const Vector& y) { return x.dot(matvec(A, y)); }

/// Symmetric saddle-point matrix [[Suw, B^T], [B, -A0]].
inline SparseMatrix compose_saddle(const SparseMatrix& Suw, const SparseMatrix& B, const SparseMatrix& A0) {
    const int n = Suw.rows();
    const int m = A0.rows();
    UCFEM_THROW_IF(Suw.cols() != n || A0.cols() != m || B.rows() != m || B.cols() != n, InvalidArgument,
                   "compose_saddle: dimension mismatch");
    std::vector<Triplet> t;
    t.reserve(Suw.nnz() + 2 * B.nnz() + A0.nnz());
    Suw.for_each([&](int i, int j, double v) { t.push_back({i, j, v}); });
    B.for_each([&](int i, int j, double v) {
        t.push_back({n + i, j, v});
        t.push_back({j, n + i, v});
    });
    A0.for_each([&](int i, int j, double v) { t.push_back({n + i, n + j, -v}); });
    return SparseMatrix::from_triplets(n + m, n + m, std::move(t));
}

struct SolveInfo {
    double residual = 0.0;   ///< ||Kx - b||_2
    double tolerance = 0.0;  ///< rel_tol (||K||_max ||x||_2 + ||b||_2)
    bool refined = false;    ///< one step of iterative refinement was applied
};

/// Sparse LU with COLAMD ordering; pivoting makes it valid for symmetric
/// indefinite systems and both ordering and pivoting are deterministic.
class DirectSolver {
public:
    explicit DirectSolver(const SparseMatrix& K) : K_(K) {
        UCFEM_THROW_IF(K.rows() != K.cols(), InvalidArgument, "solve_direct: matrix not square");
        Eigen::SparseMatrix<double> A = K.to_eigen();
        A.makeCompressed();
        lu_.analyzePattern(A);
        lu_.factorize(A);
        if (lu_.info() != Eigen::Success) {
            const std::string msg = lu_.lastErrorMessage();
            long pivot = -1;
            if (const auto pos = msg.find_last_of(' '); pos != std::string::npos) {
                try {
                    pivot = std::stol(msg.substr(pos + 1)) - 1;
                } catch (const std::exception&) {
                }
            }
            throw SolverError("solve_direct: singular matrix at pivot " + std::to_string(pivot) + " (" + msg + ")",
                              pivot);
        }
    }

    [[nodiscard]] Vector solve(const Vector& b, double rel_tol = 1e-10, SolveInfo* info = nullptr) const {
        UCFEM_THROW_IF(b.size() != K_.rows(), InvalidArgument, "solve_direct: right-hand side size mismatch");
        Vector x = lu_.solve(b);
        SolveInfo si;
        auto check = [&] {
            si.residual = (matvec(K_, x) - b).norm();
            si.tolerance = rel_tol * (K_.max_abs() * x.norm() + b.norm());
            return std::isfinite(si.residual) && si.residual <= si.tolerance;
        };
        if (!check()) {
            const Vector r = b - matvec(K_, x);
            x += lu_.solve(r);
            si.refined = true;
            if (!check()) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "solve_direct: residual %.3e exceeds tolerance %.3e", si.residual,
                              si.tolerance);
                throw SolverError(buf, -1, si.residual);
            }
        }
        if (info) *info = si;
        return x;
    }

private:
    SparseMatrix K_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

inline Vector solve_direct(const SparseMatrix& K, const Vector& b, double rel_tol = 1e-10, SolveInfo* info = nullptr) {
    return DirectSolver(K).solve(b, rel_tol, info);
}

}  // namespace ucfem
