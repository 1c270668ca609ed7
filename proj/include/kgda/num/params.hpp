#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgda/errors.hpp"
#include "kgda/num/matrix.hpp"
#include "kgda/num/rng.hpp"
#include "kgda/util/binio.hpp"
#include "kgda/util/hash.hpp"

namespace kgda::num {

// Ordered collection of named parameter matrices. Order is part of the
// identity: gradients, optimizer state, and serialization all go by index.
class ParamStore {
  public:
    int add(const std::string& name, Matrix value) {
        if (by_name_.count(name)) throw ConfigError("duplicate parameter: " + name);
        int idx = static_cast<int>(values_.size());
        by_name_[name] = idx;
        names_.push_back(name);
        values_.push_back(std::move(value));
        return idx;
    }

    int size() const { return static_cast<int>(values_.size()); }

    int index_of(const std::string& name) const {
        auto it = by_name_.find(name);
        return it == by_name_.end() ? -1 : it->second;
    }

    Matrix& value(int idx) { return values_.at(idx); }
    const Matrix& value(int idx) const { return values_.at(idx); }

    Matrix& value(const std::string& name) {
        int idx = index_of(name);
        if (idx < 0) throw ConfigError("unknown parameter: " + name);
        return values_[idx];
    }

    const Matrix& value(const std::string& name) const {
        int idx = index_of(name);
        if (idx < 0) throw ConfigError("unknown parameter: " + name);
        return values_[idx];
    }

    const std::string& name(int idx) const { return names_.at(idx); }

    // Checksum over names, shapes, and raw value bytes, in index order.
    std::uint64_t checksum() const {
        util::Fnv1a h;
        for (int i = 0; i < size(); ++i) {
            h.update(names_[i]);
            h.update_u64(static_cast<std::uint64_t>(values_[i].rows()));
            h.update_u64(static_cast<std::uint64_t>(values_[i].cols()));
            h.update(values_[i].data(), values_[i].size() * sizeof(double));
        }
        return h.digest();
    }

    void serialize(util::BinWriter& w) const {
        w.u32(static_cast<std::uint32_t>(size()));
        for (int i = 0; i < size(); ++i) {
            w.str(names_[i]);
            w.u32(static_cast<std::uint32_t>(values_[i].rows()));
            w.u32(static_cast<std::uint32_t>(values_[i].cols()));
            w.f64_array(values_[i].data(), values_[i].size());
        }
    }

    static ParamStore deserialize(util::BinReader& r) {
        ParamStore s;
        std::uint32_t n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
            std::string name = r.str();
            int rows = static_cast<int>(r.u32());
            int cols = static_cast<int>(r.u32());
            Matrix m(rows, cols);
            r.f64_array(m.data(), m.size());
            s.add(name, std::move(m));
        }
        return s;
    }

  private:
    std::vector<std::string> names_;
    std::vector<Matrix> values_;
    std::unordered_map<std::string, int> by_name_;
};

inline Matrix uniform_init(int rows, int cols, double a, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
    return m;
}

// Glorot uniform: bound sqrt(6 / (fan_in + fan_out)) with fan_in = cols,
// fan_out = rows (weights are stored out x in).
inline Matrix glorot_init(int rows, int cols, Rng& rng) {
    double a = std::sqrt(6.0 / (static_cast<double>(rows) + cols));
    return uniform_init(rows, cols, a, rng);
}

}  // namespace kgda::num
