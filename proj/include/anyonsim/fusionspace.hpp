// Fusion-tree state spaces.
//
// A row of anyons is always kept in the standard left-associated tree: a
// FusionPath stores the leaf charges plus the running totals interior[i] =
// charge of leaves[0..i] (so interior[0] = leaves[0] and interior.back() is
// the total).  Bases are enumerated lexicographically in the interior
// sequence, which fixes every matrix convention downstream.  States are dense
// amplitude vectors over such a basis, orthonormal in the unitary gauge of
// recoupling.hpp.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anyonsim/recoupling.hpp"

namespace anyonsim {

using LeafRow = std::vector<Label>;
using Interior = std::vector<Label>;

struct FusionPath {
    LeafRow leaves;
    Interior interior;

    bool valid() const {
        if (leaves.empty() || interior.size() != leaves.size()) return false;
        if (interior[0] != leaves[0]) return false;
        for (std::size_t i = 1; i < leaves.size(); ++i)
            if (!admissible(interior[i - 1], leaves[i], interior[i])) return false;
        return true;
    }
};

// Ordered basis of all fusion paths for a fixed leaf row and total charge.
class Basis {
  public:
    Basis(LeafRow leaves, Label total) : leaves_(std::move(leaves)), total_(total) {
        if (leaves_.empty()) throw std::invalid_argument("Basis: empty leaf row");
        Interior cur(leaves_.size(), 0);
        cur[0] = leaves_[0];
        build(cur, 1);
        for (std::size_t k = 0; k < paths_.size(); ++k) index_[paths_[k]] = k;
    }

    const LeafRow& leaves() const { return leaves_; }
    Label total() const { return total_; }
    std::size_t dim() const { return paths_.size(); }
    const Interior& path(std::size_t k) const { return paths_[k]; }
    const std::vector<Interior>& paths() const { return paths_; }

    // -1 if the interior sequence is not in the basis.
    int index(const Interior& interior) const {
        auto it = index_.find(interior);
        return it == index_.end() ? -1 : static_cast<int>(it->second);
    }

    std::string key() const { return make_key(leaves_, total_); }

    static std::string make_key(const LeafRow& leaves, Label total) {
        std::ostringstream os;
        for (Label l : leaves) os << l << ',';
        os << '|' << total;
        return os.str();
    }

  private:
    void build(Interior& cur, std::size_t i) {
        if (i == leaves_.size()) {
            if (cur.back() == total_) paths_.push_back(cur);
            return;
        }
        for (Label c : fusion_channels(cur[i - 1], leaves_[i])) {
            cur[i] = c;
            build(cur, i + 1);
        }
    }

    LeafRow leaves_;
    Label total_;
    std::vector<Interior> paths_;
    std::map<Interior, std::size_t> index_;
};

using BasisPtr = std::shared_ptr<const Basis>;

// Process-wide basis cache; rows in this simulator are small and few.
inline BasisPtr get_basis(const LeafRow& leaves, Label total) {
    static std::map<std::string, BasisPtr> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    std::string key = Basis::make_key(leaves, total);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto basis = std::make_shared<Basis>(leaves, total);
    cache.emplace(std::move(key), basis);
    return basis;
}

inline std::vector<FusionPath> enumerate_basis(const LeafRow& leaves, Label total) {
    if (leaves.empty()) return {};
    auto basis = get_basis(leaves, total);
    std::vector<FusionPath> out;
    out.reserve(basis->dim());
    for (const auto& interior : basis->paths()) out.push_back(FusionPath{leaves, interior});
    return out;
}

// Normalized superposition over the fusion paths of one basis.
class AnyonState {
  public:
    AnyonState() = default;
    AnyonState(BasisPtr basis, std::vector<Cx> amps)
        : basis_(std::move(basis)), amps_(std::move(amps)) {
        if (!basis_ || amps_.size() != basis_->dim())
            throw std::invalid_argument("AnyonState: amplitude/basis mismatch");
    }

    static AnyonState zero(BasisPtr basis) {
        std::vector<Cx> amps(basis->dim(), Cx{0.0, 0.0});
        return AnyonState(std::move(basis), std::move(amps));
    }

    const Basis& basis() const { return *basis_; }
    BasisPtr basis_ptr() const { return basis_; }
    const LeafRow& leaves() const { return basis_->leaves(); }
    Label total() const { return basis_->total(); }
    std::size_t dim() const { return amps_.size(); }
    const std::vector<Cx>& amplitudes() const { return amps_; }
    std::vector<Cx>& amplitudes() { return amps_; }
    Cx amplitude(std::size_t k) const { return amps_[k]; }

    double norm_sq() const {
        double n = 0.0;
        for (const auto& a : amps_) n += std::norm(a);
        return n;
    }
    double norm() const { return std::sqrt(norm_sq()); }

    AnyonState normalized() const {
        double n = norm();
        if (n < 1e-300) throw std::domain_error("AnyonState: cannot normalize zero state");
        AnyonState out = *this;
        for (auto& a : out.amps_) a /= n;
        return out;
    }

  private:
    BasisPtr basis_;
    std::vector<Cx> amps_;
};

// Unit amplitude on a single path.
inline AnyonState basis_state(const FusionPath& path) {
    if (!path.valid()) throw std::invalid_argument("basis_state: invalid fusion path");
    auto basis = get_basis(path.leaves, path.interior.back());
    auto st = AnyonState::zero(basis);
    int k = basis->index(path.interior);
    if (k < 0) throw std::logic_error("basis_state: path missing from basis");
    st.amplitudes()[k] = Cx{1.0, 0.0};
    return st;
}

// Conjugate-linear in the first argument.
inline Cx inner_product(const AnyonState& s1, const AnyonState& s2) {
    if (s1.leaves() != s2.leaves() || s1.total() != s2.total())
        throw std::domain_error("inner_product: mismatched leaf rows");
    Cx acc{0.0, 0.0};
    for (std::size_t k = 0; k < s1.dim(); ++k)
        acc += std::conj(s1.amplitude(k)) * s2.amplitude(k);
    return acc;
}

// ---------------------------------------------------------------------------
// Logical 2-qutrit encoding: idle row of eight charge-2 anyons, total 0.
// Leaves 1-4 form the left block and 5-8 the right block, each block of total
// charge 0; the logical label of a block is the channel of its first pair.
// Basis order 00,02,04,20,22,24,40,42,44 comes from ordering labels 0<2<4.

struct LogicalEncoding {
    static constexpr int kBlockLeaves = 4;
    static const std::vector<Label>& logical_labels() {
        static const std::vector<Label> l = {0, 2, 4};
        return l;
    }

    LeafRow idle_leaves() const { return LeafRow(8, 2); }
    Label total() const { return 0; }

    // Interior sequence of the idle path carrying logical pair (a, b).
    Interior interior_for(Label a, Label b) const {
        return Interior{2, a, 2, 0, 2, b, 2, 0};
    }

    // Flat index 0..8 in the declared basis order.
    static int pair_index(Label a, Label b) { return (a / 2) * 3 + (b / 2); }
    static std::pair<Label, Label> index_pair(int k) {
        return {static_cast<Label>((k / 3) * 2), static_cast<Label>((k % 3) * 2)};
    }
};

struct LogicalDecomposition {
    std::map<std::pair<Label, Label>, Cx> amplitudes;  // the 9 logical amplitudes
    double leakage = 0.0;                              // norm outside the logical subspace

    Cx at(Label a, Label b) const {
        auto it = amplitudes.find({a, b});
        return it == amplitudes.end() ? Cx{0.0, 0.0} : it->second;
    }
};

inline LogicalDecomposition logical_decode(const AnyonState& state,
                                           const LogicalEncoding& enc = {}) {
    if (state.leaves() != enc.idle_leaves() || state.total() != enc.total())
        throw std::domain_error("logical_decode: state is not on the idle 8-leaf row");
    LogicalDecomposition out;
    double logical_sq = 0.0;
    for (Label a : LogicalEncoding::logical_labels())
        for (Label b : LogicalEncoding::logical_labels()) {
            int k = state.basis().index(enc.interior_for(a, b));
            Cx amp = k >= 0 ? state.amplitude(k) : Cx{0.0, 0.0};
            out.amplitudes[{a, b}] = amp;
            logical_sq += std::norm(amp);
        }
    out.leakage = std::sqrt(std::max(0.0, state.norm_sq() - logical_sq));
    return out;
}

// Builds the idle-row state with the given nine logical amplitudes
// (normalized).  Order of `amps` follows LogicalEncoding::pair_index.
inline AnyonState logical_encode(const std::vector<Cx>& amps,
                                 const LogicalEncoding& enc = {}) {
    if (amps.size() != 9) throw std::invalid_argument("logical_encode: need 9 amplitudes");
    auto basis = get_basis(enc.idle_leaves(), enc.total());
    auto st = AnyonState::zero(basis);
    for (int k = 0; k < 9; ++k) {
        auto [a, b] = LogicalEncoding::index_pair(k);
        int idx = basis->index(enc.interior_for(a, b));
        if (idx < 0) throw std::logic_error("logical_encode: idle path missing");
        st.amplitudes()[idx] = amps[k];
    }
    return st.normalized();
}

inline AnyonState logical_basis_state(Label a, Label b, const LogicalEncoding& enc = {}) {
    std::vector<Cx> amps(9, Cx{0.0, 0.0});
    amps[LogicalEncoding::pair_index(a, b)] = Cx{1.0, 0.0};
    return logical_encode(amps, enc);
}

// Deterministic random states for property tests and linearity checks.
inline AnyonState random_state(BasisPtr basis, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Cx> amps(basis->dim());
    for (auto& a : amps) a = Cx{gauss(rng), gauss(rng)};
    return AnyonState(std::move(basis), std::move(amps)).normalized();
}

}  // namespace anyonsim
