// Protocol scripts and their executors.
//
// A ProtocolScript is a line-oriented sequence of topological instructions
// acting on a declared initial leaf row.  The executor comes in two flavors:
// exhaustive branch exploration (every measurement splits the branch with its
// Born weight) and seeded sampling.  Scripts can be validated statically:
// positions are checked against the leaf row as it evolves under every
// possible measurement outcome.
//
// Branch directives:
//   * `expect=o` on a fusion/charge measurement marks a decision point; the
//     outcomes observed at decision points form the branch's decision word.
//   * `on_outcome L: <insts>` lines directly after a measurement run their
//     payload when the outcome is L, then fall back into the main line.
//   * `repeat_until T: <insts>` reruns its payload until the payload's last
//     measurement yields T.  Instructions after that measurement must be
//     on_outcome handlers: an outcome with a handler runs it and exits the
//     loop as well, every other non-target outcome starts the next
//     iteration.  Branches still open at the iteration cap are reported as
//     unterminated.
//
// Executor convention: a fusion with outcome 0 leaves no anyon behind, so the
// vacuum leaf is removed from the row.  This keeps the strand numbering of
// the reconstructed protocol aligned through both fusion branches.

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anyonsim/gates.hpp"
#include "anyonsim/operations.hpp"

namespace anyonsim {

// ---------------------------------------------------------------------------
// Script representation.

struct Instruction {
    enum class Op {
        create_pair,      // arg1 = position, arg2 = charge
        braid,            // arg1 = position, arg2 = sign
        full_twist,       // arg1 = position, arg2 = sign
        pair_full_twist,  // arg1 = position, arg2 = sign
        fuse,             // arg1 = position
        measure_charge,   // arg1..arg2 = range
        unfuse,           // arg1 = position
        ffo,              // arg1, arg2 = positions
        on_outcome,       // arg1 = label, body
        repeat_until,     // arg1 = target label, body
        apply_recovery_twists
    };
    Op op;
    int arg1 = 0;
    int arg2 = 0;
    std::optional<Label> expect;
    std::vector<Instruction> body;
};

struct ProtocolScript {
    std::string name;
    LeafRow leaves;
    Label total = 0;
    std::vector<std::pair<std::string, int>> params;  // metadata only
    std::vector<Instruction> instructions;
};

struct ScriptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Printing (canonical form; parse(print(s)) reproduces the same bytes).

namespace detail {

inline std::string sign_str(int s) { return s >= 0 ? "+1" : "-1"; }

inline std::string instruction_str(const Instruction& ins) {
    using Op = Instruction::Op;
    std::ostringstream os;
    switch (ins.op) {
        case Op::create_pair: os << "create_pair " << ins.arg1 << ' ' << ins.arg2; break;
        case Op::braid: os << "braid " << ins.arg1 << ' ' << sign_str(ins.arg2); break;
        case Op::full_twist: os << "full_twist " << ins.arg1 << ' ' << sign_str(ins.arg2); break;
        case Op::pair_full_twist:
            os << "pair_full_twist " << ins.arg1 << ' ' << sign_str(ins.arg2);
            break;
        case Op::fuse: os << "fuse " << ins.arg1; break;
        case Op::measure_charge: os << "measure_charge " << ins.arg1 << ' ' << ins.arg2; break;
        case Op::unfuse: os << "unfuse " << ins.arg1; break;
        case Op::ffo: os << "ffo " << ins.arg1 << ' ' << ins.arg2; break;
        case Op::apply_recovery_twists: os << "apply_recovery_twists"; break;
        case Op::on_outcome: {
            os << "on_outcome " << ins.arg1 << ':';
            for (std::size_t k = 0; k < ins.body.size(); ++k)
                os << (k ? "; " : " ") << instruction_str(ins.body[k]);
            return os.str();
        }
        case Op::repeat_until: {
            os << "repeat_until " << ins.arg1 << ':';
            for (std::size_t k = 0; k < ins.body.size(); ++k)
                os << (k ? "; " : " ") << instruction_str(ins.body[k]);
            return os.str();
        }
    }
    if (ins.expect) os << " expect=" << *ins.expect;
    return os.str();
}

}  // namespace detail

inline std::string print_script(const ProtocolScript& script) {
    std::ostringstream os;
    os << "name " << script.name << '\n';
    os << "leaves";
    for (Label l : script.leaves) os << ' ' << l;
    os << '\n';
    os << "total " << script.total << '\n';
    for (const auto& [key, value] : script.params)
        os << "param " << key << ' ' << detail::sign_str(value) << '\n';
    for (const auto& ins : script.instructions) os << detail::instruction_str(ins) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

inline int parse_int(const std::string& tok, const char* what) {
    try {
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ScriptError(std::string("parse: bad ") + what + " '" + tok + "'");
    }
}

inline std::vector<std::string> tokens_of(const std::string& text) {
    std::istringstream is(text);
    std::vector<std::string> toks;
    std::string t;
    while (is >> t) toks.push_back(t);
    return toks;
}

inline std::vector<Instruction> parse_inline(const std::string& text);

// Parse one simple (body-free) instruction from tokens.
inline Instruction parse_simple(const std::vector<std::string>& toks) {
    using Op = Instruction::Op;
    if (toks.empty()) throw ScriptError("parse: empty instruction");
    Instruction ins;
    const std::string& op = toks[0];
    auto need = [&](std::size_t n) {
        if (toks.size() < n + 1)
            throw ScriptError("parse: '" + op + "' expects " + std::to_string(n) +
                              " arguments");
    };
    std::size_t consumed = 1;
    if (op == "create_pair") {
        need(2);
        ins.op = Op::create_pair;
        ins.arg1 = parse_int(toks[1], "position");
        ins.arg2 = parse_int(toks[2], "charge");
        consumed = 3;
    } else if (op == "braid" || op == "full_twist" || op == "pair_full_twist") {
        need(2);
        ins.op = op == "braid" ? Op::braid
                               : (op == "full_twist" ? Op::full_twist : Op::pair_full_twist);
        ins.arg1 = parse_int(toks[1], "position");
        ins.arg2 = parse_int(toks[2], "sign");
        if (ins.arg2 != 1 && ins.arg2 != -1) throw ScriptError("parse: sign must be +1 or -1");
        consumed = 3;
    } else if (op == "fuse") {
        need(1);
        ins.op = Op::fuse;
        ins.arg1 = parse_int(toks[1], "position");
        consumed = 2;
    } else if (op == "measure_charge") {
        need(2);
        ins.op = Op::measure_charge;
        ins.arg1 = parse_int(toks[1], "range start");
        ins.arg2 = parse_int(toks[2], "range end");
        consumed = 3;
    } else if (op == "unfuse") {
        need(1);
        ins.op = Op::unfuse;
        ins.arg1 = parse_int(toks[1], "position");
        consumed = 2;
    } else if (op == "ffo") {
        need(2);
        ins.op = Op::ffo;
        ins.arg1 = parse_int(toks[1], "position");
        ins.arg2 = parse_int(toks[2], "position");
        consumed = 3;
    } else if (op == "apply_recovery_twists") {
        ins.op = Op::apply_recovery_twists;
    } else {
        throw ScriptError("parse: unknown instruction '" + op + "'");
    }
    for (std::size_t k = consumed; k < toks.size(); ++k) {
        if (toks[k].rfind("expect=", 0) == 0)
            ins.expect = parse_int(toks[k].substr(7), "expected outcome");
        else
            throw ScriptError("parse: unexpected token '" + toks[k] + "'");
    }
    return ins;
}

// Parse an instruction that may own a body (`on_outcome`, `repeat_until`).
// A repeat_until consumes the remainder of its line, so `;` separators inside
// its body never leak to the caller.
inline Instruction parse_full(const std::string& text) {
    std::string trimmed = text;
    auto l = trimmed.find_first_not_of(" \t");
    auto r = trimmed.find_last_not_of(" \t");
    if (l == std::string::npos) throw ScriptError("parse: empty instruction");
    trimmed = trimmed.substr(l, r - l + 1);

    for (const char* head : {"on_outcome", "repeat_until"}) {
        if (trimmed.rfind(head, 0) != 0) continue;
        auto colon = trimmed.find(':');
        if (colon == std::string::npos)
            throw ScriptError(std::string("parse: '") + head + "' needs a ':'");
        auto head_toks = tokens_of(trimmed.substr(0, colon));
        if (head_toks.size() != 2)
            throw ScriptError(std::string("parse: '") + head + "' expects one label");
        Instruction ins;
        ins.op = trimmed[0] == 'o' ? Instruction::Op::on_outcome
                                   : Instruction::Op::repeat_until;
        ins.arg1 = parse_int(head_toks[1], "outcome label");
        ins.body = parse_inline(trimmed.substr(colon + 1));
        if (ins.body.empty())
            throw ScriptError(std::string("parse: '") + head + "' has an empty body");
        return ins;
    }
    return parse_simple(tokens_of(trimmed));
}

inline std::vector<Instruction> parse_inline(const std::string& text) {
    std::vector<Instruction> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t start = text.find_first_not_of(" \t;", pos);
        if (start == std::string::npos) break;
        // repeat_until swallows the remainder of the line
        if (text.compare(start, 12, "repeat_until") == 0) {
            out.push_back(parse_full(text.substr(start)));
            break;
        }
        std::size_t semi = text.find(';', start);
        std::size_t end = semi == std::string::npos ? text.size() : semi;
        out.push_back(parse_full(text.substr(start, end - start)));
        pos = end + 1;
    }
    return out;
}

}  // namespace detail

inline ProtocolScript parse_script(const std::string& text) {
    ProtocolScript script;
    script.name = "unnamed";
    std::istringstream is(text);
    std::string line;
    bool have_leaves = false;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto l = line.find_first_not_of(" \t\r");
        if (l == std::string::npos) continue;
        auto r = line.find_last_not_of(" \t\r");
        line = line.substr(l, r - l + 1);

        auto toks = detail::tokens_of(line);
        if (toks[0] == "name") {
            if (toks.size() != 2) throw ScriptError("parse: 'name' expects one word");
            script.name = toks[1];
        } else if (toks[0] == "leaves") {
            if (toks.size() < 2) throw ScriptError("parse: 'leaves' expects labels");
            script.leaves.clear();
            for (std::size_t k = 1; k < toks.size(); ++k) {
                Label v = detail::parse_int(toks[k], "leaf label");
                if (!is_label(v)) throw ScriptError("parse: leaf label out of range");
                script.leaves.push_back(v);
            }
            have_leaves = true;
        } else if (toks[0] == "total") {
            if (toks.size() != 2) throw ScriptError("parse: 'total' expects one label");
            script.total = detail::parse_int(toks[1], "total charge");
            if (!is_label(script.total)) throw ScriptError("parse: total out of range");
        } else if (toks[0] == "param") {
            if (toks.size() != 3) throw ScriptError("parse: 'param' expects key and value");
            script.params.emplace_back(toks[1], detail::parse_int(toks[2], "param value"));
        } else {
            script.instructions.push_back(detail::parse_full(line));
        }
    }
    if (!have_leaves) throw ScriptError("parse: script declares no leaf row");
    return script;
}

// ---------------------------------------------------------------------------
// Static validation: walk every instruction over the set of leaf-charge rows
// reachable under all measurement outcomes, checking positions and charges.

namespace detail {

using ChargeRows = std::set<LeafRow>;

// Split a repeat_until body into prefix / terminal measurement / exit handlers.
struct LoopShape {
    std::size_t meas_index;
    std::map<Label, const std::vector<Instruction>*> handlers;
};

inline LoopShape loop_shape(const Instruction& loop) {
    using Op = Instruction::Op;
    LoopShape shape{loop.body.size(), {}};
    for (std::size_t k = 0; k < loop.body.size(); ++k)
        if (loop.body[k].op == Op::fuse || loop.body[k].op == Op::measure_charge)
            shape.meas_index = k;
    if (shape.meas_index >= loop.body.size())
        throw ScriptError("repeat_until: body has no measurement");
    for (std::size_t k = 0; k < shape.meas_index; ++k)
        if (loop.body[k].op == Op::fuse || loop.body[k].op == Op::measure_charge ||
            loop.body[k].op == Op::on_outcome)
            throw ScriptError("repeat_until: only the terminal instruction may measure");
    for (std::size_t k = shape.meas_index + 1; k < loop.body.size(); ++k) {
        if (loop.body[k].op != Op::on_outcome)
            throw ScriptError("repeat_until: only handlers may follow the loop measurement");
        shape.handlers[loop.body[k].arg1] = &loop.body[k].body;
    }
    return shape;
}

struct Validator {
    std::vector<std::string> errors;
    int guard = 0;

    void fail(const std::string& msg) {
        if (errors.size() < 32) errors.push_back(msg);
    }

    ChargeRows step(const Instruction& ins, const ChargeRows& rows) {
        using Op = Instruction::Op;
        ChargeRows next;
        for (const LeafRow& row : rows) {
            const int n = static_cast<int>(row.size());
            auto in_range = [&](int p, int width) { return p >= 1 && p + width - 1 <= n; };
            switch (ins.op) {
                case Op::create_pair: {
                    if (ins.arg1 < 1 || ins.arg1 > n + 1) { fail("create_pair: position out of range"); break; }
                    if (!is_label(ins.arg2) || ins.arg2 == 0) { fail("create_pair: bad charge"); break; }
                    LeafRow r = row;
                    r.insert(r.begin() + (ins.arg1 - 1), 2, ins.arg2);
                    next.insert(r);
                    break;
                }
                case Op::braid: {
                    if (!in_range(ins.arg1, 2)) { fail("braid: position out of range"); break; }
                    LeafRow r = row;
                    std::swap(r[ins.arg1 - 1], r[ins.arg1]);
                    next.insert(r);
                    break;
                }
                case Op::full_twist:
                    if (!in_range(ins.arg1, 2)) { fail("full_twist: position out of range"); break; }
                    next.insert(row);
                    break;
                case Op::pair_full_twist:
                    if (!in_range(ins.arg1, 4)) { fail("pair_full_twist: needs four strands"); break; }
                    next.insert(row);
                    break;
                case Op::fuse: {
                    if (!in_range(ins.arg1, 2)) { fail("fuse: position out of range"); break; }
                    auto channels = fusion_channels(row[ins.arg1 - 1], row[ins.arg1]);
                    if (ins.expect &&
                        std::find(channels.begin(), channels.end(), *ins.expect) == channels.end())
                        fail("fuse: expected outcome " + std::to_string(*ins.expect) +
                             " is not a fusion channel");
                    for (Label c : channels) {
                        LeafRow r = row;
                        r.erase(r.begin() + ins.arg1);
                        if (c == 0)
                            r.erase(r.begin() + (ins.arg1 - 1));
                        else
                            r[ins.arg1 - 1] = c;
                        next.insert(r);
                    }
                    break;
                }
                case Op::measure_charge:
                    if (ins.arg1 < 1 || ins.arg2 > n || ins.arg1 > ins.arg2)
                        fail("measure_charge: bad range");
                    else
                        next.insert(row);
                    break;
                case Op::unfuse: {
                    if (!in_range(ins.arg1, 1)) { fail("unfuse: position out of range"); break; }
                    if (row[ins.arg1 - 1] != 2) { fail("unfuse: leaf is not charge 2"); break; }
                    LeafRow r = row;
                    r.insert(r.begin() + ins.arg1, 2);
                    next.insert(r);
                    break;
                }
                case Op::ffo: {
                    if (!in_range(ins.arg1, 1) || !in_range(ins.arg2, 1) || ins.arg1 >= ins.arg2) {
                        fail("ffo: bad positions");
                        break;
                    }
                    LeafRow r = row;
                    r[ins.arg1 - 1] = 4 - r[ins.arg1 - 1];
                    r[ins.arg2 - 1] = 4 - r[ins.arg2 - 1];
                    next.insert(r);
                    break;
                }
                case Op::apply_recovery_twists:
                    if (n < 6) fail("apply_recovery_twists: row too short");
                    else next.insert(row);
                    break;
                case Op::on_outcome:
                    fail("on_outcome: not attached to a measurement");
                    break;
                case Op::repeat_until:
                    break;  // handled by walk()
            }
            if (next.size() > 4096) { fail("validate: state explosion"); return next; }
        }
        return next;
    }

    // Expand a measurement on one row into (outcome, successor row) pairs.
    template <class Fn>
    void expand_measurement(const Instruction& ins, const LeafRow& row, Fn&& cb) {
        using Op = Instruction::Op;
        const int n = static_cast<int>(row.size());
        if (ins.op == Op::fuse) {
            if (ins.arg1 < 1 || ins.arg1 + 1 > n) {
                fail("fuse: position out of range");
                return;
            }
            auto channels = fusion_channels(row[ins.arg1 - 1], row[ins.arg1]);
            if (ins.expect && std::find(channels.begin(), channels.end(), *ins.expect) ==
                                  channels.end())
                fail("fuse: expected outcome " + std::to_string(*ins.expect) +
                     " is not a fusion channel");
            for (Label c : channels) {
                LeafRow r = row;
                r.erase(r.begin() + ins.arg1);
                if (c == 0)
                    r.erase(r.begin() + (ins.arg1 - 1));
                else
                    r[ins.arg1 - 1] = c;
                if (r.empty()) {
                    fail("fuse: row exhausted by a vacuum outcome");
                    continue;
                }
                cb(c, std::move(r));
            }
        } else {
            if (ins.arg1 < 1 || ins.arg2 > n || ins.arg1 > ins.arg2) {
                fail("measure_charge: bad range");
                return;
            }
            for (Label c = 0; c <= kLevel; ++c) cb(c, row);
        }
    }

    ChargeRows walk(const std::vector<Instruction>& list, ChargeRows rows) {
        using Op = Instruction::Op;
        for (std::size_t ip = 0; ip < list.size() && !rows.empty(); ++ip) {
            const Instruction& ins = list[ip];
            if (ins.op == Op::fuse || ins.op == Op::measure_charge) {
                std::map<Label, const std::vector<Instruction>*> handlers;
                std::size_t next_ip = ip + 1;
                while (next_ip < list.size() && list[next_ip].op == Op::on_outcome) {
                    handlers[list[next_ip].arg1] = &list[next_ip].body;
                    ++next_ip;
                }
                ChargeRows merged;
                for (const LeafRow& row : rows)
                    expand_measurement(ins, row, [&](Label c, LeafRow r) {
                        auto it = handlers.find(c);
                        if (it != handlers.end()) {
                            ChargeRows sub = walk(*it->second, {std::move(r)});
                            merged.insert(sub.begin(), sub.end());
                        } else {
                            merged.insert(std::move(r));
                        }
                    });
                rows = std::move(merged);
                ip = next_ip - 1;
            } else if (ins.op == Op::repeat_until) {
                LoopShape shape;
                try {
                    shape = loop_shape(ins);
                } catch (const ScriptError& e) {
                    fail(e.what());
                    continue;
                }
                std::vector<Instruction> prefix(ins.body.begin(),
                                                ins.body.begin() + shape.meas_index);
                const Instruction& meas = ins.body[shape.meas_index];
                ChargeRows exits;
                ChargeRows pool = rows;
                for (int iter = 0; iter < 16; ++iter) {
                    ChargeRows mid = walk(prefix, pool);
                    ChargeRows iterate;
                    for (const LeafRow& row : mid)
                        expand_measurement(meas, row, [&](Label c, LeafRow r) {
                            auto it = shape.handlers.find(c);
                            if (it != shape.handlers.end()) {
                                ChargeRows sub = walk(*it->second, {std::move(r)});
                                exits.insert(sub.begin(), sub.end());
                            } else if (c == ins.arg1) {
                                exits.insert(std::move(r));
                            } else {
                                iterate.insert(std::move(r));
                            }
                        });
                    ChargeRows grown = pool;
                    grown.insert(iterate.begin(), iterate.end());
                    if (grown == pool) break;
                    pool = std::move(grown);
                }
                rows = std::move(exits);
            } else {
                rows = step(ins, rows);
            }
            if (++guard > 100000) { fail("validate: instruction budget exceeded"); break; }
        }
        return rows;
    }
};

}  // namespace detail

// Empty vector means the script is well formed.
inline std::vector<std::string> validate(const ProtocolScript& script) {
    detail::Validator v;
    if (script.leaves.empty()) v.fail("validate: empty leaf row");
    for (Label l : script.leaves)
        if (!is_label(l)) v.fail("validate: bad leaf label");
    if (!is_label(script.total)) v.fail("validate: bad total");
    if (!v.errors.empty()) return v.errors;
    v.walk(script.instructions, {script.leaves});
    return v.errors;
}

// ---------------------------------------------------------------------------
// Execution.

struct ExecOptions {
    double prune_threshold = 1e-12;
    int loop_cap = 64;
    int unfuse_cap = 64;
};

struct ExecutedBranch {
    BranchState branch;
    std::vector<Label> decisions;  // outcomes at expect-annotated measurements
};

struct ExecutionResult {
    std::vector<ExecutedBranch> closed;
    std::vector<ExecutedBranch> unterminated;  // loop cap hit; weight retained

    double closed_weight() const {
        double w = 0.0;
        for (const auto& b : closed) w += b.branch.weight;
        return w;
    }
    double open_weight() const {
        double w = 0.0;
        for (const auto& b : unterminated) w += b.branch.weight;
        return w;
    }
};

namespace detail {

inline AnyonState remove_vacuum_leaf(const AnyonState& s, int pos) {
    LeafRow leaves = s.leaves();
    if (leaves.at(pos - 1) != 0)
        throw std::logic_error("remove_vacuum_leaf: leaf is not charge 0");
    leaves.erase(leaves.begin() + (pos - 1));
    auto basis = get_basis(leaves, s.total());
    auto out = AnyonState::zero(basis);
    for (std::size_t k = 0; k < s.dim(); ++k) {
        if (s.amplitude(k) == Cx{0.0, 0.0}) continue;
        Interior p = s.basis().path(k);
        p.erase(p.begin() + (pos - 1));
        int kk = basis->index(p);
        if (kk < 0) throw std::logic_error("remove_vacuum_leaf: missing path");
        out.amplitudes()[kk] += s.amplitude(k);
    }
    return out;
}

struct ExecContext {
    AnyonState state;
    double weight = 1.0;
    std::vector<MeasurementRecord> transcript;
    std::vector<Label> decisions;
};

class BranchExecutor {
  public:
    BranchExecutor(const ProtocolScript& script, ExecOptions opts)
        : script_(script), opts_(opts) {}

    ExecutionResult run(const AnyonState& input) {
        if (input.leaves() != script_.leaves || input.total() != script_.total)
            throw ScriptError("execute: input does not match the declared leaf row");
        result_ = ExecutionResult{};
        ExecContext ctx{input, 1.0, {}, {}};
        exec(script_.instructions, 0, std::move(ctx));
        return std::move(result_);
    }

  private:
    void exec(const std::vector<Instruction>& list, std::size_t ip, ExecContext ctx) {
        using Op = Instruction::Op;
        while (ip < list.size()) {
            const Instruction& ins = list[ip];
            switch (ins.op) {
                case Op::create_pair:
                    ctx.state = create_pair(ctx.state, ins.arg1, ins.arg2);
                    break;
                case Op::braid:
                    ctx.state = apply_braid(ctx.state, ins.arg1, ins.arg2);
                    break;
                case Op::full_twist:
                    ctx.state = full_twist(ctx.state, ins.arg1, ins.arg2);
                    break;
                case Op::pair_full_twist:
                    ctx.state = pair_full_twist(ctx.state, ins.arg1, ins.arg2);
                    break;
                case Op::unfuse: {
                    auto r = unfuse_two_two_branch(ctx.state, ins.arg1);
                    ctx.state = r.state;
                    ctx.transcript.push_back(MeasurementRecord{
                        MeasurementRecord::Kind::fusion, ins.arg1, ins.arg1 + 1, 2,
                        r.per_try_success});
                    break;
                }
                case Op::ffo:
                    ctx.state = ffo(ctx.state, ins.arg1, ins.arg2);
                    break;
                case Op::apply_recovery_twists:
                    ctx.state = full_twist(ctx.state, 1, -1);
                    ctx.state = full_twist(ctx.state, 5, -1);
                    break;
                case Op::fuse:
                case Op::measure_charge: {
                    dispatch_measurement(list, ip, std::move(ctx));
                    return;
                }
                case Op::on_outcome:
                    // Skipped: handlers are consumed by their measurement.
                    break;
                case Op::repeat_until: {
                    run_loop(list, ip, std::move(ctx));
                    return;
                }
            }
            ++ip;
        }
        result_.closed.push_back(ExecutedBranch{
            BranchState{ctx.state, ctx.weight, ctx.transcript}, ctx.decisions});
    }

    void dispatch_measurement(const std::vector<Instruction>& list, std::size_t ip,
                              ExecContext ctx) {
        using Op = Instruction::Op;
        const Instruction& ins = list[ip];
        std::map<Label, const std::vector<Instruction>*> handlers;
        std::size_t next_ip = ip + 1;
        while (next_ip < list.size() && list[next_ip].op == Op::on_outcome) {
            handlers[list[next_ip].arg1] = &list[next_ip].body;
            ++next_ip;
        }
        for (auto& m : measure(ins, ctx.state)) {
            double w = ctx.weight * m.probability;
            if (w < opts_.prune_threshold) continue;
            ExecContext sub = ctx;
            sub.weight = w;
            sub.state = m.state;
            if (ins.op == Op::fuse && m.outcome == 0)
                sub.state = remove_vacuum_leaf(sub.state, ins.arg1);
            sub.transcript.push_back(MeasurementRecord{
                ins.op == Op::fuse ? MeasurementRecord::Kind::fusion
                                   : MeasurementRecord::Kind::charge,
                ins.arg1, ins.op == Op::fuse ? ins.arg1 + 1 : ins.arg2, m.outcome,
                m.probability});
            if (ins.expect) sub.decisions.push_back(m.outcome);
            auto it = handlers.find(m.outcome);
            if (it != handlers.end()) {
                exec_handler(*it->second, list, next_ip, std::move(sub));
            } else {
                exec(list, next_ip, std::move(sub));
            }
        }
    }

    // Run a handler body, then fall back into the main line after it.
    void exec_handler(const std::vector<Instruction>& body,
                      const std::vector<Instruction>& list, std::size_t resume_ip,
                      ExecContext ctx) {
        std::vector<Instruction> combined = body;
        combined.insert(combined.end(), list.begin() + resume_ip, list.end());
        exec(combined, 0, std::move(ctx));
    }

    void run_loop(const std::vector<Instruction>& list, std::size_t ip, ExecContext ctx) {
        const Instruction& loop = list[ip];
        auto shape = loop_shape(loop);
        struct Pending {
            ExecContext ctx;
            int iter;
        };
        std::vector<Pending> pend;
        pend.push_back(Pending{std::move(ctx), 0});
        while (!pend.empty()) {
            Pending cur = std::move(pend.back());
            pend.pop_back();
            if (cur.iter >= opts_.loop_cap) {
                result_.unterminated.push_back(ExecutedBranch{
                    BranchState{cur.ctx.state, cur.ctx.weight, cur.ctx.transcript},
                    cur.ctx.decisions});
                continue;
            }
            ExecContext mid = std::move(cur.ctx);
            for (std::size_t k = 0; k < shape.meas_index; ++k)
                mid.state = apply_plain(loop.body[k], mid.state, &mid);
            const Instruction& meas = loop.body[shape.meas_index];
            for (auto& m : measure(meas, mid.state)) {
                double w = mid.weight * m.probability;
                if (w < opts_.prune_threshold) continue;
                ExecContext sub = mid;
                sub.weight = w;
                sub.state = m.state;
                if (meas.op == Instruction::Op::fuse && m.outcome == 0)
                    sub.state = remove_vacuum_leaf(sub.state, meas.arg1);
                sub.transcript.push_back(MeasurementRecord{
                    meas.op == Instruction::Op::fuse ? MeasurementRecord::Kind::fusion
                                                     : MeasurementRecord::Kind::charge,
                    meas.arg1,
                    meas.op == Instruction::Op::fuse ? meas.arg1 + 1 : meas.arg2,
                    m.outcome, m.probability});
                if (meas.expect) sub.decisions.push_back(m.outcome);
                auto it = shape.handlers.find(m.outcome);
                if (it != shape.handlers.end())
                    exec_handler(*it->second, list, ip + 1, std::move(sub));
                else if (m.outcome == loop.arg1)
                    exec(list, ip + 1, std::move(sub));
                else
                    pend.push_back(Pending{std::move(sub), cur.iter + 1});
            }
        }
    }


    // Non-branching instructions inside loop bodies.
    AnyonState apply_plain(const Instruction& ins, const AnyonState& st, ExecContext* ctx) {
        using Op = Instruction::Op;
        switch (ins.op) {
            case Op::create_pair: return create_pair(st, ins.arg1, ins.arg2);
            case Op::braid: return apply_braid(st, ins.arg1, ins.arg2);
            case Op::full_twist: return full_twist(st, ins.arg1, ins.arg2);
            case Op::pair_full_twist: return pair_full_twist(st, ins.arg1, ins.arg2);
            case Op::ffo: return ffo(st, ins.arg1, ins.arg2);
            case Op::unfuse: {
                auto r = unfuse_two_two_branch(st, ins.arg1);
                ctx->transcript.push_back(MeasurementRecord{
                    MeasurementRecord::Kind::fusion, ins.arg1, ins.arg1 + 1, 2,
                    r.per_try_success});
                return r.state;
            }
            case Op::apply_recovery_twists:
                return full_twist(full_twist(st, 1, -1), 5, -1);
            default:
                throw ScriptError("repeat_until: only the terminal instruction may measure");
        }
    }

    std::vector<MeasurementOutcome> measure(const Instruction& ins, const AnyonState& st) {
        if (ins.op == Instruction::Op::fuse) return fuse_measure(st, ins.arg1);
        return measure_total_charge(st, ins.arg1, ins.arg2);
    }

    const ProtocolScript& script_;
    ExecOptions opts_;
    ExecutionResult result_;
};

}  // namespace detail

inline ExecutionResult execute_branches(const ProtocolScript& script,
                                        const AnyonState& input,
                                        const ExecOptions& opts = {}) {
    auto errors = validate(script);
    if (!errors.empty()) throw ScriptError("execute: invalid script: " + errors.front());
    detail::BranchExecutor ex(script, opts);
    return ex.run(input);
}

// Single path through the branch tree, drawn per Born probabilities.
inline ExecutedBranch execute_sampled(const ProtocolScript& script, const AnyonState& input,
                                      std::uint64_t seed, const ExecOptions& opts = {}) {
    auto errors = validate(script);
    if (!errors.empty()) throw ScriptError("execute: invalid script: " + errors.front());
    Rng rng(seed);
    using Op = Instruction::Op;

    detail::ExecContext ctx{input, 1.0, {}, {}};
    // Explicit frame stack: (list, ip, loop instruction or null, iteration).
    struct Frame {
        const std::vector<Instruction>* list;
        std::size_t ip;
        const Instruction* loop = nullptr;
        std::size_t loop_meas_index = 0;
        int iter = 0;
    };
    std::vector<Frame> stack;
    stack.push_back(Frame{&script.instructions, 0});

    auto sample_measurement = [&](const Instruction& ins) {
        auto outcomes = ins.op == Op::fuse ? fuse_measure(ctx.state, ins.arg1)
                                           : measure_total_charge(ctx.state, ins.arg1, ins.arg2);
        std::vector<double> probs;
        for (auto& o : outcomes) probs.push_back(o.probability);
        auto& pick = outcomes[sample_index(probs, rng)];
        ctx.weight *= pick.probability;
        ctx.state = pick.state;
        if (ins.op == Op::fuse && pick.outcome == 0)
            ctx.state = detail::remove_vacuum_leaf(ctx.state, ins.arg1);
        ctx.transcript.push_back(MeasurementRecord{
            ins.op == Op::fuse ? MeasurementRecord::Kind::fusion
                               : MeasurementRecord::Kind::charge,
            ins.arg1, ins.op == Op::fuse ? ins.arg1 + 1 : ins.arg2, pick.outcome,
            pick.probability});
        if (ins.expect) ctx.decisions.push_back(pick.outcome);
        return pick.outcome;
    };

    while (!stack.empty()) {
        Frame& fr = stack.back();
        if (fr.ip >= fr.list->size()) {
            stack.pop_back();
            continue;
        }
        const Instruction& ins = (*fr.list)[fr.ip];
        switch (ins.op) {
            case Op::create_pair: ctx.state = create_pair(ctx.state, ins.arg1, ins.arg2); ++fr.ip; break;
            case Op::braid: ctx.state = apply_braid(ctx.state, ins.arg1, ins.arg2); ++fr.ip; break;
            case Op::full_twist: ctx.state = full_twist(ctx.state, ins.arg1, ins.arg2); ++fr.ip; break;
            case Op::pair_full_twist: ctx.state = pair_full_twist(ctx.state, ins.arg1, ins.arg2); ++fr.ip; break;
            case Op::ffo: ctx.state = ffo(ctx.state, ins.arg1, ins.arg2); ++fr.ip; break;
            case Op::apply_recovery_twists:
                ctx.state = full_twist(full_twist(ctx.state, 1, -1), 5, -1);
                ++fr.ip;
                break;
            case Op::unfuse: {
                auto r = unfuse_two_two_sampled(ctx.state, ins.arg1, rng, opts.unfuse_cap);
                ctx.state = r.state;
                ctx.transcript.push_back(MeasurementRecord{
                    MeasurementRecord::Kind::fusion, ins.arg1, ins.arg1 + 1, 2,
                    r.per_try_success});
                ++fr.ip;
                break;
            }
            case Op::on_outcome: ++fr.ip; break;
            case Op::repeat_until: {
                const Instruction* loop = &ins;
                auto shape = detail::loop_shape(*loop);
                ++fr.ip;
                stack.push_back(Frame{&loop->body, 0, loop, shape.meas_index, 0});
                break;
            }
            case Op::fuse:
            case Op::measure_charge: {
                std::map<Label, const std::vector<Instruction>*> handlers;
                std::size_t next_ip = fr.ip + 1;
                while (next_ip < fr.list->size() && (*fr.list)[next_ip].op == Op::on_outcome) {
                    handlers[(*fr.list)[next_ip].arg1] = &(*fr.list)[next_ip].body;
                    ++next_ip;
                }
                Label outcome = sample_measurement(ins);
                auto it = handlers.find(outcome);
                bool loop_meas = fr.loop != nullptr && fr.ip == fr.loop_meas_index;
                if (loop_meas) {
                    if (it == handlers.end() && outcome != fr.loop->arg1) {
                        // next iteration
                        if (++fr.iter >= opts.loop_cap)
                            throw ScriptError("execute: repeat_until cap exceeded");
                        fr.ip = 0;
                        break;
                    }
                    const std::vector<Instruction>* handler_body =
                        it != handlers.end() ? it->second : nullptr;
                    stack.pop_back();  // exit the loop; fr is now dangling
                    if (handler_body) stack.push_back(Frame{handler_body, 0});
                    break;
                }
                fr.ip = next_ip;
                if (it != handlers.end()) stack.push_back(Frame{it->second, 0});
                break;
            }
        }
    }
    return ExecutedBranch{BranchState{ctx.state, ctx.weight, ctx.transcript}, ctx.decisions};
}

// ---------------------------------------------------------------------------
// Gate extraction over the logical 2-qutrit.

struct GateExtraction {
    GateMatrix gate;             // from the first complete route
    double branch_weight = 0.0;  // summed over routes, per input
    double weight_spread = 0.0;  // input dependence of the branch weight
    double max_leakage = 0.0;
    double unitarity_defect = 0.0;
    double linearity_defect = 0.0;
    double route_agreement = 0.0;  // projective spread across routes
    std::size_t routes = 0;
};

namespace detail {

// Transcript signature: the full outcome history identifying one route.
inline std::string route_signature(const BranchState& b) {
    std::ostringstream os;
    for (const auto& r : b.transcript)
        os << (r.kind == MeasurementRecord::Kind::fusion ? 'f' : 'c') << r.lo << '.' << r.hi
           << '=' << r.outcome << ';';
    return os.str();
}

}  // namespace detail

inline GateExtraction extract_gate(const ProtocolScript& script,
                                   const std::vector<Label>& selector,
                                   const ExecOptions& opts = {},
                                   double leakage_tol = kDefaultTol) {
    LogicalEncoding enc;
    // route signature -> 9 decoded columns
    std::map<std::string, std::vector<std::vector<Cx>>> routes;
    std::map<std::string, std::vector<double>> route_weights;
    GateExtraction out;

    for (int k = 0; k < 9; ++k) {
        auto [a, b] = LogicalEncoding::index_pair(k);
        auto result = execute_branches(script, logical_basis_state(a, b), opts);
        bool any = false;
        for (const auto& br : result.closed) {
            if (br.decisions != selector) continue;
            any = true;
            if (br.branch.state.leaves() != enc.idle_leaves() ||
                br.branch.state.total() != enc.total())
                throw ScriptError("extract_gate: branch does not end on the idle row");
            auto dec = logical_decode(br.branch.state);
            if (dec.leakage > leakage_tol)
                throw ScriptError("extract_gate: leakage above tolerance");
            out.max_leakage = std::max(out.max_leakage, dec.leakage);
            std::string sig = detail::route_signature(br.branch);
            auto& cols = routes[sig];
            if (cols.empty()) cols.assign(9, std::vector<Cx>(9, Cx{0.0, 0.0}));
            for (int r = 0; r < 9; ++r) {
                auto [ra, rb] = LogicalEncoding::index_pair(r);
                cols[k][r] = dec.at(ra, rb);
            }
            auto& ws = route_weights[sig];
            if (ws.empty()) ws.assign(9, 0.0);
            ws[k] += br.branch.weight;
        }
        if (!any) throw ScriptError("extract_gate: no branch matches the selector");
    }

    // Assemble one gate per route and check mutual projective agreement.
    std::vector<GateMatrix> gates;
    for (auto& [sig, cols] : routes) {
        GateMatrix g(9, 9);
        for (int k = 0; k < 9; ++k)
            for (int r = 0; r < 9; ++r) g(r, k) = cols[k][r];
        gates.push_back(std::move(g));
    }
    out.routes = gates.size();
    if (gates.empty()) throw ScriptError("extract_gate: selector matched no route");
    for (std::size_t i = 1; i < gates.size(); ++i) {
        auto cmp = compare_projective(gates[i], gates[0], 1e-6);
        out.route_agreement = std::max(out.route_agreement, cmp.distance);
    }
    out.gate = gates[0];
    out.unitarity_defect = out.gate.unitarity_defect();

    double wmin = 1e300, wmax = 0.0, wtot = 0.0;
    for (int k = 0; k < 9; ++k) {
        double w = 0.0;
        for (auto& [sig, ws] : route_weights) w += ws[k];
        wmin = std::min(wmin, w);
        wmax = std::max(wmax, w);
        wtot += w;
    }
    out.branch_weight = wtot / 9.0;
    out.weight_spread = wmax - wmin;

    // Linearity on three random superpositions.
    for (std::uint64_t seed : {11u, 23u, 37u}) {
        auto input = random_state(get_basis(enc.idle_leaves(), enc.total()), seed);
        // Restrict to the logical subspace so leakage stays zero.
        auto dec = logical_decode(input);
        std::vector<Cx> amps(9);
        for (int k = 0; k < 9; ++k) {
            auto [a, b] = LogicalEncoding::index_pair(k);
            amps[k] = dec.at(a, b);
        }
        auto logical_input = logical_encode(amps);
        auto result = execute_branches(script, logical_input, opts);
        for (const auto& br : result.closed) {
            if (br.decisions != selector) continue;
            auto got = logical_decode(br.branch.state);
            std::vector<Cx> expect_amps(9);
            auto in_dec = logical_decode(logical_input);
            std::vector<Cx> in(9);
            for (int k = 0; k < 9; ++k) {
                auto [a, b] = LogicalEncoding::index_pair(k);
                in[k] = in_dec.at(a, b);
            }
            Mat col(9, 1), res(9, 1);
            for (int k = 0; k < 9; ++k) col(k, 0) = in[k];
            res = out.gate * col;
            Mat actual(9, 1);
            for (int k = 0; k < 9; ++k) {
                auto [a, b] = LogicalEncoding::index_pair(k);
                actual(k, 0) = got.at(a, b);
            }
            double n = 0.0;
            for (int k = 0; k < 9; ++k) n += std::norm(res(k, 0));
            for (int k = 0; k < 9; ++k) res(k, 0) /= std::sqrt(std::max(n, 1e-300));
            auto cmp = compare_projective(actual, res, 1e-6);
            out.linearity_defect = std::max(out.linearity_defect, cmp.distance);
            break;  // one route suffices per superposition
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// The reconstructed default protocol.
//
// Structure (left side listed; the right side mirrors through the center):
//   1. ancilla pair of 1's created between the blocks        create_pair 5 1
//   2. charge-line twists on the straddling (2,1) pairs      full_twist 4/6
//   3. read braid inside each block                          braid 3/7
//   4. transmit twist: hooks the line iff the block read 2   full_twist 4/6
//   5. central braid of the ancilla pair                     braid 5
//   6. edge-reset twist (makes both lines 2 again)           full_twist 4/6
//   7. restore braid (undoes the read split)                 braid 3/7
//   8. ancilla fusion: outcome 2 -> Theorem gate branch,
//      outcome 0 -> second-gate branch
//   9. unfuse (or fresh pair of 2's), interferometric close,
//      FFO fallback on outcome 4, braid-and-remeasure loop
//      on outcome 2, and the two block-restoring fusions.

struct ScriptParams {
    int line_sign = +1, line_mirror = +1;
    int read_sign = +1, read_mirror = +1;
    int transmit_sign = +1, transmit_mirror = +1;
    int central_sign = +1;
    int central_count = 1;
    int reset_sign = +1, reset_mirror = +1;
    int restore_sign = +1, restore_mirror = +1;

    std::vector<std::pair<std::string, int>> as_metadata() const {
        return {{"line_sign", line_sign},         {"line_mirror", line_mirror},
                {"read_sign", read_sign},         {"read_mirror", read_mirror},
                {"transmit_sign", transmit_sign}, {"transmit_mirror", transmit_mirror},
                {"central_sign", central_sign},   {"central_count", central_count},
                {"reset_sign", reset_sign},       {"reset_mirror", reset_mirror},
                {"restore_sign", restore_sign},   {"restore_mirror", restore_mirror}};
    }
};

inline ProtocolScript default_script(const ScriptParams& p = {}) {
    using Op = Instruction::Op;
    ProtocolScript s;
    s.name = "default";
    s.leaves = LeafRow(8, 2);
    s.total = 0;
    s.params = p.as_metadata();
    auto add = [&](Op op, int a1, int a2 = 0) {
        Instruction ins;
        ins.op = op;
        ins.arg1 = a1;
        ins.arg2 = a2;
        s.instructions.push_back(ins);
    };
    add(Op::create_pair, 5, 1);
    add(Op::full_twist, 4, p.line_sign);
    add(Op::full_twist, 6, p.line_sign * p.line_mirror);
    add(Op::braid, 3, p.read_sign);
    add(Op::braid, 7, p.read_sign * p.read_mirror);
    add(Op::full_twist, 4, p.transmit_sign);
    add(Op::full_twist, 6, p.transmit_sign * p.transmit_mirror);
    for (int t = 0; t < p.central_count; ++t) add(Op::braid, 5, p.central_sign);
    add(Op::full_twist, 4, p.reset_sign);
    add(Op::full_twist, 6, p.reset_sign * p.reset_mirror);
    add(Op::braid, 3, p.restore_sign);
    add(Op::braid, 7, p.restore_sign * p.restore_mirror);

    {   // ancilla fusion with both branch continuations
        Instruction fuse;
        fuse.op = Op::fuse;
        fuse.arg1 = 5;
        fuse.expect = 2;
        s.instructions.push_back(fuse);
        Instruction on2;
        on2.op = Op::on_outcome;
        on2.arg1 = 2;
        Instruction unf;
        unf.op = Op::unfuse;
        unf.arg1 = 5;
        on2.body.push_back(unf);
        s.instructions.push_back(on2);
        Instruction on0;
        on0.op = Op::on_outcome;
        on0.arg1 = 0;
        Instruction cp;
        cp.op = Op::create_pair;
        cp.arg1 = 5;
        cp.arg2 = 2;
        on0.body.push_back(cp);
        s.instructions.push_back(on0);
    }
    {   // interferometric close on the five anyons 6..10
        Instruction meas;
        meas.op = Op::measure_charge;
        meas.arg1 = 6;
        meas.arg2 = 10;
        s.instructions.push_back(meas);
        Instruction on2;
        on2.op = Op::on_outcome;
        on2.arg1 = 2;
        Instruction loop;
        loop.op = Op::repeat_until;
        loop.arg1 = 0;
        Instruction b5;
        b5.op = Op::braid;
        b5.arg1 = 5;
        b5.arg2 = +1;
        Instruction remeasure;
        remeasure.op = Op::measure_charge;
        remeasure.arg1 = 6;
        remeasure.arg2 = 10;
        Instruction loop_on4;
        loop_on4.op = Op::on_outcome;
        loop_on4.arg1 = 4;
        Instruction loop_ffo;
        loop_ffo.op = Op::ffo;
        loop_ffo.arg1 = 5;
        loop_ffo.arg2 = 6;
        loop_on4.body.push_back(loop_ffo);
        loop.body.push_back(b5);
        loop.body.push_back(remeasure);
        loop.body.push_back(loop_on4);
        on2.body.push_back(loop);
        s.instructions.push_back(on2);
        Instruction on4;
        on4.op = Op::on_outcome;
        on4.arg1 = 4;
        Instruction f;
        f.op = Op::ffo;
        f.arg1 = 5;
        f.arg2 = 6;
        on4.body.push_back(f);
        s.instructions.push_back(on4);
    }
    add(Op::fuse, 4);
    add(Op::fuse, 5);
    return s;
}

// The expected fuse where the ancilla pair carries the Theorem's winning
// outcome 2; the spec's default décision words.
inline std::vector<Label> gate1_selector() { return {2}; }
inline std::vector<Label> gate2_selector() { return {0}; }

// ---------------------------------------------------------------------------
// Calibration over the finite convention grid.

struct CalibrationCandidate {
    ScriptParams params;
    bool extracted = false;
    double dist_gate1 = 2.0;  // projective distance, fusion-outcome-2 branch
    double dist_gate2 = 2.0;  // projective distance, fusion-outcome-0 branch
    double weight2 = 0.0, weight0 = 0.0;
    double independence_defect = 0.0;
    std::string error;

    double score() const { return std::max(dist_gate1, dist_gate2); }
};

struct CalibrationReport {
    std::vector<CalibrationCandidate> candidates;  // sorted, best first
    int best_index = -1;
    bool within_tolerance = false;
    double tolerance = 1e-6;

    const CalibrationCandidate& best() const {
        if (best_index < 0) throw std::runtime_error("calibration: empty report");
        return candidates[best_index];
    }
};

// The default grid varies the braid structure (signs of the read, central and
// restore braids with their mirror couplings and the central braid count);
// the twist signs do not affect the produced gates and stay +1.
inline std::vector<ScriptParams> default_calibration_grid() {
    std::vector<ScriptParams> grid;
    for (int rs : {+1, -1})
        for (int rm : {+1, -1})
            for (int cs : {+1, -1})
                for (int cc : {1, 2})
                    for (int fs : {+1, -1})
                        for (int fm : {+1, -1}) {
                            ScriptParams p;
                            p.read_sign = rs;
                            p.read_mirror = rm;
                            p.central_sign = cs;
                            p.central_count = cc;
                            p.restore_sign = fs;
                            p.restore_mirror = fm;
                            grid.push_back(p);
                        }
    return grid;
}

inline CalibrationReport calibrate_script(const std::vector<ScriptParams>& grid,
                                          double tolerance = 1e-6,
                                          const ExecOptions& opts = {}) {
    if (grid.empty()) throw std::invalid_argument("calibrate_script: empty grid");
    CalibrationReport report;
    report.tolerance = tolerance;
    for (const auto& params : grid) {
        CalibrationCandidate cand;
        cand.params = params;
        try {
            auto script = default_script(params);
            auto g2 = extract_gate(script, gate1_selector(), opts);
            auto g0 = extract_gate(script, gate2_selector(), opts);
            cand.extracted = true;
            cand.dist_gate1 =
                compare_projective(g2.gate, paper_gates::gate1().matrix(), tolerance).distance;
            cand.dist_gate2 =
                compare_projective(g0.gate, paper_gates::gate2().matrix(), tolerance).distance;
            cand.weight2 = g2.branch_weight;
            cand.weight0 = g0.branch_weight;
            cand.independence_defect = std::max(g2.weight_spread, g0.weight_spread);
        } catch (const std::exception& e) {
            cand.error = e.what();
        }
        report.candidates.push_back(std::move(cand));
    }
    std::stable_sort(report.candidates.begin(), report.candidates.end(),
                     [](const CalibrationCandidate& a, const CalibrationCandidate& b) {
                         return a.score() < b.score();
                     });
    report.best_index = 0;
    report.within_tolerance = report.candidates.front().score() <= tolerance;
    return report;
}

// ---------------------------------------------------------------------------
// Recovery algorithm: rerun the protocol with sigma_1 full-twist-inverse
// recovery between runs until the accumulated gate is the Theorem gate.
//
// Control flow per run (f = fusion outcome of that run):
//   first run:   f == 2 -> done (gate1);   f == 0 -> twists, go to second
//   second run:  f == 0 -> done;           f == 2 -> twists, start over
// The composite is tracked in exact phase arithmetic via the published gate
// algebra; the simulated state is carried along and checked against it.

struct RecoveryPath {
    std::vector<Label> word;  // fusion outcomes, one per protocol run
    double weight = 0.0;
    ExactDiagonalGate composite;
    bool composite_is_gate1 = false;
    AnyonState final_state;     // simulated idle-row state of this path
    double state_defect = 0.0;  // projective distance from composite * input
};

struct RecoveryResult {
    std::vector<RecoveryPath> terminated;
    double unterminated_weight = 0.0;
    std::vector<double> open_weight_by_depth;  // after 1..depth runs
    double route_defect = 0.0;                 // within-run route disagreement
};

namespace detail {

struct RunOutcome {
    double weight;
    AnyonState state;
    double route_defect;
};

// One protocol run in branch mode, merged per fusion outcome.  Routes inside
// one outcome (interferometric 0/4, loop exits) are verified to agree
// projectively, then merged.
inline std::map<Label, RunOutcome> run_protocol_once(const ProtocolScript& script,
                                                     const AnyonState& input,
                                                     const ExecOptions& opts,
                                                     double* open_weight) {
    auto result = execute_branches(script, input, opts);
    if (open_weight) *open_weight += result.open_weight();
    std::map<Label, RunOutcome> merged;
    for (const auto& br : result.closed) {
        if (br.decisions.size() != 1)
            throw ScriptError("recovery: expected a single decision per run");
        Label f = br.decisions[0];
        auto it = merged.find(f);
        if (it == merged.end()) {
            merged.emplace(f, RunOutcome{br.branch.weight, br.branch.state, 0.0});
        } else {
            Mat a(br.branch.state.dim(), 1), b(it->second.state.dim(), 1);
            for (std::size_t k = 0; k < br.branch.state.dim(); ++k)
                a(k, 0) = br.branch.state.amplitude(k);
            for (std::size_t k = 0; k < it->second.state.dim(); ++k)
                b(k, 0) = it->second.state.amplitude(k);
            auto cmp = compare_projective(a, b, 1e-6);
            it->second.route_defect = std::max(it->second.route_defect, cmp.distance);
            it->second.weight += br.branch.weight;
        }
    }
    return merged;
}

inline double state_vs_composite(const AnyonState& state, const ExactDiagonalGate& comp,
                                 const AnyonState& input) {
    auto in_dec = logical_decode(input);
    std::vector<Cx> expected(9);
    double n2 = 0.0;
    for (int k = 0; k < 9; ++k) {
        auto [a, b] = LogicalEncoding::index_pair(k);
        expected[k] = comp.diag[k].to_complex() * in_dec.at(a, b);
        n2 += std::norm(expected[k]);
    }
    auto got = logical_decode(state);
    Mat e(9, 1), g(9, 1);
    for (int k = 0; k < 9; ++k) {
        auto [a, b] = LogicalEncoding::index_pair(k);
        e(k, 0) = expected[k] / std::sqrt(std::max(n2, 1e-300));
        g(k, 0) = got.at(a, b);
    }
    return compare_projective(g, e, 1e-6).distance;
}

inline void recover_branches(const ProtocolScript& script, const AnyonState& original,
                             const AnyonState& current, double weight,
                             std::vector<Label> word, ExactDiagonalGate composite,
                             bool second_phase, int depth, int depth_cap,
                             const ExecOptions& opts, RecoveryResult& out) {
    if (depth >= depth_cap) {
        out.unterminated_weight += weight;
        return;
    }
    double open = 0.0;
    auto runs = run_protocol_once(script, current, opts, &open);
    out.unterminated_weight += weight * open;
    for (auto& [f, run] : runs) {
        out.route_defect = std::max(out.route_defect, run.route_defect);
        std::vector<Label> w2 = word;
        w2.push_back(f);
        double wt = weight * run.weight;
        bool done = (!second_phase && f == 2) || (second_phase && f == 0);
        ExactDiagonalGate comp = (f == 2 ? paper_gates::gate1() : paper_gates::gate2()) * composite;
        if (done) {
            RecoveryPath path;
            path.word = std::move(w2);
            path.weight = wt;
            path.composite = comp;
            path.composite_is_gate1 = comp.proportional_to(paper_gates::gate1());
            path.final_state = run.state;
            path.state_defect = state_vs_composite(run.state, comp, original);
            out.terminated.push_back(std::move(path));
        } else {
            AnyonState twisted = full_twist(full_twist(run.state, 1, -1), 5, -1);
            ExactDiagonalGate comp2 = paper_gates::recovery_t() * comp;
            recover_branches(script, original, twisted, wt, std::move(w2), comp2,
                             !second_phase, depth + 1, depth_cap, opts, out);
        }
    }
}

}  // namespace detail

inline RecoveryResult run_recovery_branches(const AnyonState& input, int depth_cap = 4,
                                            const ProtocolScript& script = default_script(),
                                            const ExecOptions& opts = {}) {
    RecoveryResult out;
    detail::recover_branches(script, input, input, 1.0, {}, ExactDiagonalGate::identity(),
                             false, 0, depth_cap, opts, out);
    // Open weight after k runs = total weight minus weight terminated by k.
    out.open_weight_by_depth.assign(depth_cap, 0.0);
    for (int d = 0; d < depth_cap; ++d) {
        double closed = 0.0;
        for (const auto& p : out.terminated)
            if (static_cast<int>(p.word.size()) <= d + 1) closed += p.weight;
        out.open_weight_by_depth[d] = std::max(0.0, 1.0 - closed);
    }
    return out;
}

inline RecoveryPath run_recovery_sampled(const AnyonState& input, std::uint64_t seed,
                                         int restart_cap = 8,
                                         const ProtocolScript& script = default_script(),
                                         const ExecOptions& opts = {}) {
    RecoveryPath path;
    path.composite = ExactDiagonalGate::identity();
    AnyonState current = input;
    bool second_phase = false;
    for (int run = 0; run < restart_cap; ++run) {
        auto br = execute_sampled(script, current, seed + 1000003ULL * run, opts);
        if (br.decisions.size() != 1)
            throw ScriptError("recovery: expected a single decision per run");
        Label f = br.decisions[0];
        path.word.push_back(f);
        path.composite =
            (f == 2 ? paper_gates::gate1() : paper_gates::gate2()) * path.composite;
        bool done = (!second_phase && f == 2) || (second_phase && f == 0);
        if (done) {
            path.weight = 1.0;
            path.composite_is_gate1 = path.composite.proportional_to(paper_gates::gate1());
            path.final_state = br.branch.state;
            path.state_defect = detail::state_vs_composite(br.branch.state, path.composite, input);
            return path;
        }
        current = full_twist(full_twist(br.branch.state, 1, -1), 5, -1);
        path.composite = paper_gates::recovery_t() * path.composite;
        second_phase = !second_phase;
    }
    throw ScriptError("recovery: restart cap exceeded");
}

}  // namespace anyonsim
