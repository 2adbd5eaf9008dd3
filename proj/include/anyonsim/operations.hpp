// Non-unitary topological primitives: vacuum pair creation, fusion
// measurement, collective-charge (interferometric) measurement, unfusion with
// retry, and FFO.
//
// Measurements follow the Born rule in the orthonormal fusion-tree gauge;
// every returned post-state is renormalized and the branch probabilities of
// one measurement sum to 1.  A collective charge measurement is realized by
// F-moving the range total onto an explicit edge, projecting and moving back.

#pragma once

#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "anyonsim/braiding.hpp"
#include "anyonsim/fusionspace.hpp"

namespace anyonsim {

struct MeasurementRecord {
    enum class Kind { fusion, charge };
    Kind kind;
    int lo = 0, hi = 0;  // 1-based strand range (lo==hi-1 pair for fusions)
    Label outcome = 0;
    double probability = 1.0;
};

// One open branch of a probabilistic execution.
struct BranchState {
    AnyonState state;
    double weight = 1.0;  // product of branch probabilities
    std::vector<MeasurementRecord> transcript;
};

struct MeasurementOutcome {
    Label outcome;
    double probability;
    AnyonState state;  // renormalized post-state
};

using Rng = std::mt19937_64;

inline std::size_t sample_index(const std::vector<double>& probs, Rng& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double x = uni(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (x <= acc) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
}

// ---------------------------------------------------------------------------
// Vacuum pair creation.  The new pair occupies positions pos, pos+1 (1-based)
// with joint channel 0; expanding onto the standard tree multiplies each path
// by the F-column <(m q)_x q ; m | m (q q)_0 ; m>.

inline AnyonState create_pair(const AnyonState& state, int pos, Label charge) {
    const LeafRow& leaves = state.leaves();
    const int n = static_cast<int>(leaves.size());
    if (pos < 1 || pos > n + 1)
        throw std::invalid_argument("create_pair: insertion position out of range");
    if (!is_label(charge) || charge == 0)
        throw std::invalid_argument("create_pair: charge must be 1..4");
    const int p = pos - 1;

    LeafRow new_leaves = leaves;
    new_leaves.insert(new_leaves.begin() + p, 2, charge);
    auto dst = get_basis(new_leaves, state.total());
    auto out = AnyonState::zero(dst);

    const Basis& src = state.basis();
    for (std::size_t k = 0; k < src.dim(); ++k) {
        Cx amp = state.amplitude(k);
        if (amp == Cx{0.0, 0.0}) continue;
        const Interior& path = src.path(k);
        const Label prev = (p == 0) ? 0 : path[p - 1];
        if (p == 0) {
            // Pair at the head of the row: interior starts (q, 0, ...).
            Interior q(path.size() + 2);
            q[0] = charge;
            q[1] = 0;
            for (std::size_t t = 0; t < path.size(); ++t) q[t + 2] = path[t];
            int kk = dst->index(q);
            if (kk < 0) throw std::logic_error("create_pair: missing image path");
            out.amplitudes()[kk] += amp;
            continue;
        }
        const FMatrix& f = f_matrix(prev, charge, charge, prev);
        for (Label x : f.row_channels) {
            Cx c = f.at(x, 0);
            if (c == Cx{0.0, 0.0}) continue;
            Interior q = path;
            q.insert(q.begin() + p, {x, prev});
            int kk = dst->index(q);
            if (kk < 0) throw std::logic_error("create_pair: missing image path");
            out.amplitudes()[kk] += amp * c;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fusion measurement of the adjacent pair (i, i+1), 1-based.  Returns the
// Born distribution over the pair channels; in each post-state the pair is
// replaced by a single leaf carrying the outcome.

inline std::vector<MeasurementOutcome> fuse_measure(const AnyonState& state, int i) {
    const LeafRow& leaves = state.leaves();
    detail::check_position(leaves, i, "fuse_measure");
    const int j = i - 1;
    const Label la = leaves[j], lb = leaves[j + 1];
    const Basis& src = state.basis();

    // Amplitudes in the basis where the pair channel e is explicit, keyed by
    // the reduced interior (pair replaced by one leaf of charge e).
    std::map<Label, std::map<Interior, Cx>> channel_amps;
    for (std::size_t k = 0; k < src.dim(); ++k) {
        Cx amp = state.amplitude(k);
        if (amp == Cx{0.0, 0.0}) continue;
        const Interior& p = src.path(k);
        Interior reduced = p;
        reduced.erase(reduced.begin() + j);
        if (j == 0) {
            channel_amps[p[1]][reduced] += amp;
            continue;
        }
        const FMatrix& f = f_matrix(p[j - 1], la, lb, p[j + 1]);
        for (Label e : f.col_channels) {
            Cx c = f.at(p[j], e);
            if (c != Cx{0.0, 0.0}) channel_amps[e][reduced] += amp * c;
        }
    }

    std::vector<MeasurementOutcome> out;
    for (auto& [e, amps] : channel_amps) {
        double prob = 0.0;
        for (auto& [path, amp] : amps) prob += std::norm(amp);
        if (prob <= 1e-24) continue;
        LeafRow new_leaves = leaves;
        new_leaves.erase(new_leaves.begin() + j + 1);
        new_leaves[j] = e;
        auto dst = get_basis(new_leaves, state.total());
        auto post = AnyonState::zero(dst);
        for (auto& [path, amp] : amps) {
            int kk = dst->index(path);
            if (kk < 0) throw std::logic_error("fuse_measure: missing post path");
            post.amplitudes()[kk] = amp;
        }
        out.push_back(MeasurementOutcome{e, prob, post.normalized()});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Collective-charge measurement of the contiguous range [lo..hi] (1-based).

namespace detail {

// Hybrid amplitudes with the total of leaves [i0..k] explicit at position k
// and attach points m_{k}.. after it (see the stepwise F-move derivation in
// the header comment).  Forward direction: k runs i0+1 .. j0.
using HybridAmps = std::map<Interior, Cx>;

inline HybridAmps range_forward(const AnyonState& state, int i0, int j0) {
    const LeafRow& leaves = state.leaves();
    HybridAmps cur;
    for (std::size_t k = 0; k < state.basis().dim(); ++k) {
        Cx amp = state.amplitude(k);
        if (amp == Cx{0.0, 0.0}) continue;
        Interior v = state.basis().path(k);
        v.insert(v.begin() + i0, leaves[i0]);
        cur[v] += amp;
    }
    for (int k = i0 + 1; k <= j0; ++k) {
        HybridAmps next;
        for (const auto& [v, amp] : cur) {
            const Label prev = v[i0 - 1];
            const Label u_prev = v[k - 1];
            const Label attach = v[k];      // total of leaves 0..k-1
            const Label m_k = v[k + 1];     // total of leaves 0..k
            const FMatrix& f = f_matrix(prev, u_prev, leaves[k], m_k);
            for (Label u : f.col_channels) {
                Cx c = f.at(attach, u);
                if (c == Cx{0.0, 0.0}) continue;
                Interior w = v;
                w[k] = u;
                next[w] += amp * c;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

inline AnyonState range_backward(const AnyonState& reference, HybridAmps amps, int i0,
                                 int j0) {
    const LeafRow& leaves = reference.leaves();
    for (int k = j0; k >= i0 + 1; --k) {
        HybridAmps next;
        for (const auto& [v, amp] : amps) {
            const Label prev = v[i0 - 1];
            const Label u_prev = v[k - 1];
            const Label u = v[k];
            const Label m_k = v[k + 1];
            const FMatrix& f = f_matrix(prev, u_prev, leaves[k], m_k);
            for (Label attach : f.row_channels) {
                Cx c = std::conj(f.at(attach, u));
                if (c == Cx{0.0, 0.0}) continue;
                Interior w = v;
                w[k] = attach;
                next[w] += amp * c;
            }
        }
        amps = std::move(next);
    }
    auto out = AnyonState::zero(reference.basis_ptr());
    for (const auto& [v, amp] : amps) {
        Interior std_path = v;
        std_path.erase(std_path.begin() + i0);
        int kk = reference.basis().index(std_path);
        if (kk < 0) throw std::logic_error("measure_total_charge: missing path");
        out.amplitudes()[kk] += amp;
    }
    return out;
}

}  // namespace detail

inline std::vector<MeasurementOutcome> measure_total_charge(const AnyonState& state, int lo,
                                                            int hi) {
    const int n = static_cast<int>(state.leaves().size());
    if (lo < 1 || hi > n || lo > hi)
        throw std::invalid_argument("measure_total_charge: bad range");
    const int i0 = lo - 1, j0 = hi - 1;

    std::vector<MeasurementOutcome> out;
    if (i0 == 0) {
        // The range total is already the explicit edge interior[j0].
        std::map<Label, double> probs;
        for (std::size_t k = 0; k < state.basis().dim(); ++k)
            probs[state.basis().path(k)[j0]] += std::norm(state.amplitude(k));
        for (auto& [t, prob] : probs) {
            if (prob <= 1e-24) continue;
            auto post = AnyonState::zero(state.basis_ptr());
            for (std::size_t k = 0; k < state.basis().dim(); ++k)
                if (state.basis().path(k)[j0] == t)
                    post.amplitudes()[k] = state.amplitude(k);
            out.push_back(MeasurementOutcome{t, prob, post.normalized()});
        }
        return out;
    }

    auto hybrid = detail::range_forward(state, i0, j0);
    std::map<Label, detail::HybridAmps> by_total;
    for (const auto& [v, amp] : hybrid) by_total[v[j0]][v] += amp;
    for (auto& [t, amps] : by_total) {
        double prob = 0.0;
        for (const auto& [v, amp] : amps) prob += std::norm(amp);
        if (prob <= 1e-24) continue;
        auto post = detail::range_backward(state, amps, i0, j0);
        out.push_back(MeasurementOutcome{t, prob, post.normalized()});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Unfusion of a charge-2 leaf into two charge-2 leaves, repeat-until-success:
// create a (2,2) vacuum pair next to the leaf, fuse the leaf with the nearer
// ancilla; outcome 2 succeeds, otherwise the outcome is fused back into the
// remaining ancilla (a deterministic step) and the round repeats.

struct UnfuseResult {
    AnyonState state;        // success post-state, renormalized
    double per_try_success;  // Born weight of outcome 2 in one round
    int tries;               // rounds consumed (1 in collapsed branch mode)
};

namespace detail {

struct UnfuseRound {
    std::vector<MeasurementOutcome> outcomes;  // of the first fusion
    int success_index = -1;
};

inline UnfuseRound unfuse_round(const AnyonState& state, int i) {
    UnfuseRound round;
    auto with_pair = create_pair(state, i + 1, 2);
    round.outcomes = fuse_measure(with_pair, i);
    for (std::size_t t = 0; t < round.outcomes.size(); ++t)
        if (round.outcomes[t].outcome == 2) round.success_index = static_cast<int>(t);
    return round;
}

// Collapse a failed round: fuse the non-2 outcome into the remaining ancilla
// (single channel, probability 1), restoring a charge-2 leaf at position i.
inline AnyonState unfuse_recover(const MeasurementOutcome& failed, int i) {
    auto branches = fuse_measure(failed.state, i);
    if (branches.size() != 1 || branches[0].outcome != 2)
        throw std::logic_error("unfuse: recovery fusion was not deterministic");
    return branches[0].state;
}

}  // namespace detail

inline UnfuseResult unfuse_two_two_branch(const AnyonState& state, int i) {
    if (state.leaves().at(i - 1) != 2)
        throw std::invalid_argument("unfuse_two_two: leaf is not charge 2");
    auto round = detail::unfuse_round(state, i);
    if (round.success_index < 0)
        throw std::runtime_error("unfuse_two_two: success outcome has zero weight");
    const auto& s = round.outcomes[round.success_index];
    return UnfuseResult{s.state, s.probability, 1};
}

inline UnfuseResult unfuse_two_two_sampled(const AnyonState& state, int i, Rng& rng,
                                           int max_tries = 64) {
    if (state.leaves().at(i - 1) != 2)
        throw std::invalid_argument("unfuse_two_two: leaf is not charge 2");
    AnyonState cur = state;
    for (int attempt = 1; attempt <= max_tries; ++attempt) {
        auto round = detail::unfuse_round(cur, i);
        std::vector<double> probs;
        for (const auto& o : round.outcomes) probs.push_back(o.probability);
        std::size_t pick = sample_index(probs, rng);
        if (round.outcomes[pick].outcome == 2) {
            double p = round.success_index >= 0
                           ? round.outcomes[round.success_index].probability
                           : 0.0;
            return UnfuseResult{round.outcomes[pick].state, p, attempt};
        }
        cur = detail::unfuse_recover(round.outcomes[pick], i);
    }
    throw std::runtime_error("unfuse_two_two: retry cap exceeded");
}

// ---------------------------------------------------------------------------
// FFO: create a vacuum pair of 4's, transport one member next to leaf i and
// keep the other next to leaf j, then fuse one 4 into each.  Charge 4 is
// abelian, so both fusions are deterministic and the whole map is unitary up
// to phase; leaf charges transform a -> 4-a at i and j.

inline AnyonState ffo(const AnyonState& state, int i, int j) {
    const int n = static_cast<int>(state.leaves().size());
    if (i < 1 || j <= i || j > n) throw std::invalid_argument("ffo: bad leaf positions");

    AnyonState cur = create_pair(state, j + 1, 4);
    for (int p = j + 1; p >= i + 2; --p) cur = apply_braid(cur, p - 1, +1);

    auto fuse_forced = [](const AnyonState& s, int pos) {
        auto branches = fuse_measure(s, pos);
        if (branches.size() != 1)
            throw std::logic_error("ffo: internal fusion was not deterministic");
        return branches[0].state;
    };
    cur = fuse_forced(cur, i);      // (leaf_i, 4) -> 4 - leaf_i
    cur = fuse_forced(cur, j);      // (leaf_j, 4) -> 4 - leaf_j
    return cur;
}

}  // namespace anyonsim
