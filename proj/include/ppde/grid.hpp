#pragma once

#include <span>
#include <vector>

namespace ppde {

// Uniform grid 0 = t_0 < t_1 < ... < t_n = T with step h = T/n.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double horizon, int steps);

    double horizon() const { return horizon_; }
    int steps() const { return steps_; }
    double step() const { return step_; }

    // t_i = i*h for i < n; the last node is pinned to T so that t_n == T
    // holds bit-exactly even when n*h rounds away from T.
    double node(int i) const;

    bool same_layout(const TimeGrid& other) const {
        return horizon_ == other.horizon_ && steps_ == other.steps_;
    }

private:
    double horizon_ = 0.0;
    int steps_ = 0;
    double step_ = 0.0;
};

TimeGrid make_grid(double horizon, int steps);

// A d-dimensional path skeleton on a TimeGrid, defined on nodes 0..upto.
// Row 0 is always the zero vector. Values are immutable after construction;
// extension produces a new path.
class DiscretePath {
public:
    DiscretePath() = default;

    static DiscretePath zero(const TimeGrid& grid, int dim);
    // rows.size() must be (upto+1)*dim with rows[0..dim) == 0.
    static DiscretePath from_rows(const TimeGrid& grid, int dim, std::vector<double> rows);
    // New path with one extra row placed verbatim (used by extension ops).
    static DiscretePath extended(const DiscretePath& base, std::span<const double> next_row);

    const TimeGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    int upto() const { return upto_; }

    std::span<const double> row(int i) const;
    std::span<const double> endpoint() const { return row(upto_); }
    double value(int i, int c) const { return data_[static_cast<size_t>(i) * dim_ + c]; }

private:
    TimeGrid grid_;
    int dim_ = 0;
    int upto_ = -1;
    std::vector<double> data_;
};

// New path extended by one node with row[k+1] = row[k] + delta.
DiscretePath concat(const DiscretePath& path, std::span<const double> delta);

// max_{0<=i<=k} |omega_{t_i}| (Euclidean norm per row).
double sup_norm(const DiscretePath& path, int k);

// sqrt(|t_i - t_j|) + sup over grid nodes of the distance between the two
// skeletons, each frozen at its own index onward. Grids must share the
// horizon; steps may differ (skeletons are read as step functions on the
// union of the two node sets).
double d_metric(int i, const DiscretePath& a, int j, const DiscretePath& b);

}  // namespace ppde
