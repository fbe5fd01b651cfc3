#include "ppde/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ppde/linalg.hpp"

namespace ppde {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
    }
    if (steps < 1) {
        throw std::invalid_argument("TimeGrid: steps must be >= 1");
    }
    step_ = horizon_ / steps_;
}

double TimeGrid::node(int i) const {
    if (i < 0 || i > steps_) throw std::out_of_range("TimeGrid::node: index out of range");
    if (i == steps_) return horizon_;
    return i * step_;
}

TimeGrid make_grid(double horizon, int steps) { return TimeGrid(horizon, steps); }

DiscretePath DiscretePath::zero(const TimeGrid& grid, int dim) {
    if (dim < 1) throw std::invalid_argument("DiscretePath: dim must be >= 1");
    DiscretePath p;
    p.grid_ = grid;
    p.dim_ = dim;
    p.upto_ = 0;
    p.data_.assign(dim, 0.0);
    return p;
}

DiscretePath DiscretePath::from_rows(const TimeGrid& grid, int dim, std::vector<double> rows) {
    if (dim < 1) throw std::invalid_argument("DiscretePath: dim must be >= 1");
    if (rows.empty() || rows.size() % dim != 0) {
        throw std::invalid_argument("DiscretePath: rows size must be a positive multiple of dim");
    }
    const int upto = static_cast<int>(rows.size() / dim) - 1;
    if (upto > grid.steps()) {
        throw std::invalid_argument("DiscretePath: more rows than grid nodes");
    }
    for (int c = 0; c < dim; ++c) {
        if (rows[c] != 0.0) throw std::invalid_argument("DiscretePath: row 0 must be the origin");
    }
    DiscretePath p;
    p.grid_ = grid;
    p.dim_ = dim;
    p.upto_ = upto;
    p.data_ = std::move(rows);
    return p;
}

DiscretePath DiscretePath::extended(const DiscretePath& base, std::span<const double> next_row) {
    if (base.upto_ >= base.grid_.steps()) {
        throw std::invalid_argument("DiscretePath: path already terminal");
    }
    if (static_cast<int>(next_row.size()) != base.dim_) {
        throw std::invalid_argument("DiscretePath: row dimension mismatch");
    }
    DiscretePath p;
    p.grid_ = base.grid_;
    p.dim_ = base.dim_;
    p.upto_ = base.upto_ + 1;
    p.data_.reserve(base.data_.size() + base.dim_);
    p.data_ = base.data_;
    p.data_.insert(p.data_.end(), next_row.begin(), next_row.end());
    return p;
}

std::span<const double> DiscretePath::row(int i) const {
    if (i < 0 || i > upto_) throw std::out_of_range("DiscretePath::row: index out of range");
    return {data_.data() + static_cast<size_t>(i) * dim_, static_cast<size_t>(dim_)};
}

DiscretePath concat(const DiscretePath& path, std::span<const double> delta) {
    if (static_cast<int>(delta.size()) != path.dim()) {
        throw std::invalid_argument("concat: increment dimension mismatch");
    }
    std::vector<double> next(path.dim());
    const auto end = path.endpoint();
    for (int c = 0; c < path.dim(); ++c) next[c] = end[c] + delta[c];
    return DiscretePath::extended(path, next);
}

double sup_norm(const DiscretePath& path, int k) {
    if (k < 0 || k > path.upto()) throw std::out_of_range("sup_norm: index out of range");
    double m = 0.0;
    for (int i = 0; i <= k; ++i) {
        m = std::max(m, euclidean_norm(path.row(i).data(), path.dim()));
    }
    return m;
}

namespace {

// Value of the skeleton at time s, frozen at node `frozen` onward, reading
// the skeleton as a step function (last node at or before s).
std::span<const double> frozen_value_at(const DiscretePath& p, int frozen, double s) {
    const double h = p.grid().step();
    // Tolerant floor: union times come from another grid of the same horizon.
    int idx = static_cast<int>(std::floor(s / h + 1e-9));
    idx = std::min(idx, p.grid().steps());
    idx = std::min(idx, frozen);
    return p.row(idx);
}

}  // namespace

double d_metric(int i, const DiscretePath& a, int j, const DiscretePath& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("d_metric: dimension mismatch");
    if (a.grid().horizon() != b.grid().horizon()) {
        throw std::invalid_argument("d_metric: horizons differ");
    }
    if (i < 0 || i > a.upto() || j < 0 || j > b.upto()) {
        throw std::out_of_range("d_metric: index out of range");
    }
    std::vector<double> times;
    times.reserve(static_cast<size_t>(a.grid().steps()) + b.grid().steps() + 2);
    for (int k = 0; k <= a.grid().steps(); ++k) times.push_back(a.grid().node(k));
    for (int k = 0; k <= b.grid().steps(); ++k) times.push_back(b.grid().node(k));
    std::sort(times.begin(), times.end());

    const int d = a.dim();
    std::vector<double> diff(d);
    double sup = 0.0;
    for (double s : times) {
        const auto va = frozen_value_at(a, i, s);
        const auto vb = frozen_value_at(b, j, s);
        for (int c = 0; c < d; ++c) diff[c] = va[c] - vb[c];
        sup = std::max(sup, euclidean_norm(diff.data(), d));
    }
    return std::sqrt(std::abs(a.grid().node(i) - b.grid().node(j))) + sup;
}

}  // namespace ppde
