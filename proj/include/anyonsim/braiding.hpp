// Braid generators and twists on a fixed leaf row.
//
// sigma_i exchanges strands i, i+1 (1-based).  In the standard basis sigma_1
// is channel-diagonal; for i >= 2 the generator is the channel-diagonal
// R-phase conjugated by one F-move on each side.  Braiding unequal charges
// also permutes the leaf row, so a RowUnitary is in general a map between the
// bases of two leaf rows.  All matrices here are unitary in the orthonormal
// gauge of recoupling.hpp.

#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "anyonsim/fusionspace.hpp"
#include "anyonsim/linalg.hpp"
#include "anyonsim/recoupling.hpp"

namespace anyonsim {

struct BraidLetter {
    int index;  // 1-based strand position, 1 <= index <= n-1
    int sign;   // +1 or -1
};

using BraidWord = std::vector<BraidLetter>;

inline BraidWord inverse_word(const BraidWord& word) {
    BraidWord out;
    out.reserve(word.size());
    for (auto it = word.rbegin(); it != word.rend(); ++it)
        out.push_back(BraidLetter{it->index, -it->sign});
    return out;
}

struct RowUnitary {
    BasisPtr src;
    BasisPtr dst;
    Mat matrix;  // dst.dim() x src.dim()

    AnyonState apply(const AnyonState& state) const {
        if (state.basis_ptr().get() != src.get() && state.basis().key() != src->key())
            throw std::invalid_argument("RowUnitary: basis mismatch");
        return AnyonState(dst, matrix.apply(state.amplitudes()));
    }
};

namespace detail {

inline void check_position(const LeafRow& leaves, int i, const char* where) {
    if (i < 1 || i + 1 > static_cast<int>(leaves.size()))
        throw std::invalid_argument(std::string(where) + ": strand position " +
                                    std::to_string(i) + " out of range for " +
                                    std::to_string(leaves.size()) + " leaves");
}

inline Cx r_phase(Label a, Label b, Label c, int sign) {
    Cx v = r_symbol(a, b, c);
    return sign > 0 ? v : std::conj(v);
}

}  // namespace detail

// The unitary of sigma_i^{sign} from basis(leaves,total) to the basis with
// leaves i, i+1 exchanged.
inline RowUnitary braid_generator(const LeafRow& leaves, Label total, int i, int sign) {
    detail::check_position(leaves, i, "braid_generator");
    const int j = i - 1;  // 0-based position of the left strand
    const Label la = leaves[j], lb = leaves[j + 1];

    LeafRow dst_leaves = leaves;
    std::swap(dst_leaves[j], dst_leaves[j + 1]);
    BasisPtr src = get_basis(leaves, total);
    BasisPtr dst = get_basis(dst_leaves, total);

    Mat m(dst->dim(), src->dim());
    for (std::size_t k = 0; k < src->dim(); ++k) {
        const Interior& p = src->path(k);
        if (j == 0) {
            Interior q = p;
            q[0] = lb;
            int kk = dst->index(q);
            if (kk < 0) throw std::logic_error("braid_generator: missing image path");
            m(kk, k) = detail::r_phase(la, lb, p[1], sign);
            continue;
        }
        const Label prev = p[j - 1];
        const Label mid = p[j];
        const Label next = p[j + 1];
        const FMatrix& fwd = f_matrix(prev, la, lb, next);
        const FMatrix& bwd = f_matrix(prev, lb, la, next);
        for (Label e : fwd.col_channels) {
            Cx c1 = fwd.at(mid, e) * detail::r_phase(la, lb, e, sign);
            if (c1 == Cx{0.0, 0.0}) continue;
            for (Label mid2 : bwd.row_channels) {
                Cx c2 = std::conj(bwd.at(mid2, e));
                if (c2 == Cx{0.0, 0.0}) continue;
                Interior q = p;
                q[j] = mid2;
                int kk = dst->index(q);
                if (kk < 0) throw std::logic_error("braid_generator: missing image path");
                m(kk, k) += c1 * c2;
            }
        }
    }
    return RowUnitary{std::move(src), std::move(dst), std::move(m)};
}

inline AnyonState apply_braid(const AnyonState& state, const BraidWord& word) {
    AnyonState cur = state;
    for (const auto& letter : word) {
        auto gen = braid_generator(cur.leaves(), cur.total(), letter.index, letter.sign);
        cur = gen.apply(cur);
    }
    return cur;
}

inline AnyonState apply_braid(const AnyonState& state, int i, int sign) {
    return apply_braid(state, BraidWord{{i, sign}});
}

// sigma_i^{2 sign}: channel-diagonal on strands (i, i+1) with phase
// r_symbol(a,b,c)^2 (or its conjugate), leaf row unchanged.
inline AnyonState full_twist(const AnyonState& state, int i, int sign) {
    const LeafRow& leaves = state.leaves();
    detail::check_position(leaves, i, "full_twist");
    const int j = i - 1;
    const Label la = leaves[j], lb = leaves[j + 1];
    auto phase2 = [&](Label c) {
        Cx v = r_symbol(la, lb, c) * r_symbol(lb, la, c);
        return sign > 0 ? v : std::conj(v);
    };

    AnyonState out = AnyonState::zero(state.basis_ptr());
    const Basis& basis = state.basis();
    for (std::size_t k = 0; k < basis.dim(); ++k) {
        Cx amp = state.amplitude(k);
        if (amp == Cx{0.0, 0.0}) continue;
        const Interior& p = basis.path(k);
        if (j == 0) {
            out.amplitudes()[k] += amp * phase2(p[1]);
            continue;
        }
        const FMatrix& f = f_matrix(p[j - 1], la, lb, p[j + 1]);
        for (Label e : f.col_channels) {
            Cx c1 = f.at(p[j], e) * phase2(e);
            if (c1 == Cx{0.0, 0.0}) continue;
            for (Label mid2 : f.row_channels) {
                Cx c2 = std::conj(f.at(mid2, e));
                if (c2 == Cx{0.0, 0.0}) continue;
                Interior q = p;
                q[j] = mid2;
                int kk = basis.index(q);
                if (kk < 0) throw std::logic_error("full_twist: missing image path");
                out.amplitudes()[kk] += amp * c1 * c2;
            }
        }
    }
    return out;
}

// Pure-braid full twist of the pair (i, i+1) around the pair (i+2, i+3) as
// units: the square of the composite word exchanging the two pairs,
//   w = sigma_{i+1} sigma_i sigma_{i+2} sigma_{i+1},   twist = w^2
// (inverse word squared for sign = -1).
inline BraidWord pair_full_twist_word(int i, int sign) {
    BraidWord swap = {{i + 1, +1}, {i, +1}, {i + 2, +1}, {i + 1, +1}};
    BraidWord word;
    if (sign > 0) {
        word = swap;
        word.insert(word.end(), swap.begin(), swap.end());
    } else {
        BraidWord inv = inverse_word(swap);
        word = inv;
        word.insert(word.end(), inv.begin(), inv.end());
    }
    return word;
}

inline AnyonState pair_full_twist(const AnyonState& state, int i, int sign) {
    const LeafRow& leaves = state.leaves();
    if (i < 1 || i + 3 > static_cast<int>(leaves.size()))
        throw std::invalid_argument("pair_full_twist: needs four contiguous strands");
    return apply_braid(state, pair_full_twist_word(i, sign));
}

// Matrix of an arbitrary braid word (for tests and table dumps).
inline RowUnitary braid_word_unitary(const LeafRow& leaves, Label total,
                                     const BraidWord& word) {
    BasisPtr src = get_basis(leaves, total);
    RowUnitary acc{src, src, Mat::identity(src->dim())};
    LeafRow cur = leaves;
    for (const auto& letter : word) {
        auto gen = braid_generator(cur, total, letter.index, letter.sign);
        acc = RowUnitary{acc.src, gen.dst, gen.matrix * acc.matrix};
        cur = gen.dst->leaves();
    }
    return acc;
}

}  // namespace anyonsim
