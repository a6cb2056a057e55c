#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace wiresim::detail {

// Symmetric positive-definite banded matrix, lower band stored column-wise:
// entry(d, j) = A(j + d, j) for 0 <= d <= half_bandwidth.
class BandedSpd {
public:
    BandedSpd(int n, int half_bandwidth)
        : n_(n), hb_(half_bandwidth), a_((half_bandwidth + 1) * n, 0.0) {}

    int size() const { return n_; }

    double& at(int i, int j) {
        if (i < j) std::swap(i, j);
        return a_[(i - j) * n_ + j];
    }
    double get(int i, int j) const {
        if (i < j) std::swap(i, j);
        return (i - j > hb_) ? 0.0 : a_[(i - j) * n_ + j];
    }

    void add(int i, int j, double v) { at(i, j) += v; }

    // Enforce x[d] = value by symmetric elimination against rhs.
    void constrain_dof(int d, double value, std::vector<double>& rhs) {
        for (int i = std::max(0, d - hb_); i <= std::min(n_ - 1, d + hb_); ++i) {
            if (i == d) continue;
            rhs[i] -= get(i, d) * value;
            at(i, d) = 0.0;
        }
        at(d, d) = 1.0;
        rhs[d] = value;
    }

    // In-place Cholesky. Throws on a non-positive pivot.
    void factor() {
        for (int j = 0; j < n_; ++j) {
            double s = at(j, j);
            for (int k = std::max(0, j - hb_); k < j; ++k) {
                const double l = get(j, k);
                s -= l * l;
            }
            if (!(s > 0)) throw std::runtime_error("banded factor: matrix not SPD");
            const double ljj = std::sqrt(s);
            at(j, j) = ljj;
            for (int i = j + 1; i <= std::min(n_ - 1, j + hb_); ++i) {
                double v = get(i, j);
                for (int k = std::max(0, i - hb_); k < j; ++k)
                    v -= get(i, k) * get(j, k);
                at(i, j) = v / ljj;
            }
        }
    }

    // Solve A x = b after factor(); b is overwritten with x.
    void solve(std::vector<double>& b) const {
        for (int i = 0; i < n_; ++i) {
            double s = b[i];
            for (int k = std::max(0, i - hb_); k < i; ++k) s -= get(i, k) * b[k];
            b[i] = s / get(i, i);
        }
        for (int i = n_ - 1; i >= 0; --i) {
            double s = b[i];
            for (int k = i + 1; k <= std::min(n_ - 1, i + hb_); ++k)
                s -= get(k, i) * b[k];
            b[i] = s / get(i, i);
        }
    }

private:
    int n_, hb_;
    std::vector<double> a_;
};

}  // namespace wiresim::detail
