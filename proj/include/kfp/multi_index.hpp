#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace kfp {

/// Multi-index over the three velocity axes (also reused for spatial
/// derivative orders, where unused trailing components stay zero).
struct MultiIndex {
    std::array<int, 3> a{0, 0, 0};

    int order() const { return a[0] + a[1] + a[2]; }
    int operator[](int i) const { return a[i]; }
    int& operator[](int i) { return a[i]; }

    bool operator==(const MultiIndex& o) const { return a == o.a; }

    MultiIndex bump(int axis, int by) const {
        MultiIndex m = *this;
        m.a[axis] += by;
        return m;
    }
};

inline std::uint32_t pack_index(const MultiIndex& m) {
    return static_cast<std::uint32_t>(m.a[0]) |
           (static_cast<std::uint32_t>(m.a[1]) << 8) |
           (static_cast<std::uint32_t>(m.a[2]) << 16);
}

/// Enumeration of all multi-indices with |alpha| <= max_degree in graded
/// lexicographic order, with O(1) position lookup.  Positions are stable for
/// a fixed degree, so coefficient vectors built against the same set are
/// directly compatible.
class HermiteIndexSet {
  public:
    explicit HermiteIndexSet(int max_degree) : max_degree_(max_degree) {
        if (max_degree < 0 || max_degree > 200)
            throw std::invalid_argument("HermiteIndexSet: bad degree");
        for (int n = 0; n <= max_degree; ++n)
            for (int i = n; i >= 0; --i)
                for (int j = n - i; j >= 0; --j) {
                    MultiIndex m;
                    m.a = {i, j, n - i - j};
                    position_.emplace(pack_index(m),
                                      static_cast<int>(indices_.size()));
                    indices_.push_back(m);
                }
    }

    int max_degree() const { return max_degree_; }
    int size() const { return static_cast<int>(indices_.size()); }
    const MultiIndex& operator[](int i) const { return indices_[i]; }

    /// Position of a multi-index, or -1 when outside the set.
    int position(const MultiIndex& m) const {
        if (m.a[0] < 0 || m.a[1] < 0 || m.a[2] < 0 || m.order() > max_degree_)
            return -1;
        auto it = position_.find(pack_index(m));
        return it == position_.end() ? -1 : it->second;
    }

    int require_position(const MultiIndex& m) const {
        int p = position(m);
        if (p < 0)
            throw std::out_of_range("multi-index outside truncation range");
        return p;
    }

  private:
    int max_degree_;
    std::vector<MultiIndex> indices_;
    std::unordered_map<std::uint32_t, int> position_;
};

}  // namespace kfp
