#pragma once

#include "multimatch/market.hpp"

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace multimatch {

enum class BlockKind { block, weak_setwise, setwise };

// Certificate of a stability violation: the freshly signed contracts plus,
// for the coordinated notions, the outcome the blocking agents deviate to.
struct BlockWitness {
    BlockKind kind{};
    ContractSet added;                     // nonempty, disjoint from the audited outcome
    std::optional<ContractSet> deviation;  // weak_setwise and setwise only
};

struct IrResult {
    bool ok = true;
    std::vector<int> failing_agents;
};

// An outcome is individually rational when no agent wants to unilaterally
// drop contracts: her portfolio is exactly her choice from it.
inline IrResult individual_rationality(const Market& m, ContractSet y) {
    IrResult r;
    for (int a = 0; a < m.agent_count(); ++a) {
        if (m.restrict(y, a) != m.choose(a, y)) {
            r.ok = false;
            r.failing_agents.push_back(a);
        }
    }
    return r;
}

inline bool is_individually_rational(const Market& m, ContractSet y) {
    for (int a = 0; a < m.agent_count(); ++a)
        if (m.restrict(y, a) != m.choose(a, y)) return false;
    return true;
}

// A nonempty set of fresh contracts blocks an outcome when every signer of the
// new contracts includes all of them in her best choice from old plus new.
// Candidates are searched in canonical order, so the returned witness is the
// minimal one.
inline std::optional<BlockWitness> find_block(const Market& m, ContractSet y) {
    std::optional<BlockWitness> found;
    for_each_subset_canonical(m.all_contracts() - y, [&](ContractSet z) {
        if (z.empty()) return true;
        const ContractSet joint = y | z;
        bool blocks = true;
        m.signers(z).for_each([&](int a) {
            if (blocks && !m.restrict(z, a).subset_of(m.choose(a, joint))) blocks = false;
        });
        if (!blocks) return true;
        found = BlockWitness{BlockKind::block, z, std::nullopt};
        return false;
    });
    return found;
}

// A weak setwise block additionally requires the blocking agents to agree on
// one deviation outcome realising all of their best choices. That outcome
// exists exactly when, for every contract with two or more signers among the
// blocking agents, those signers agree on whether to keep it; the deviation is
// then the union of their choices. (The equivalence with a direct search over
// deviation outcomes is cross-checked by a brute-force oracle in the tests.)
inline std::optional<BlockWitness> find_weak_setwise_block(const Market& m, ContractSet y) {
    std::optional<BlockWitness> found;
    std::vector<ContractSet> chosen(static_cast<std::size_t>(m.agent_count()));
    for_each_subset_canonical(m.all_contracts() - y, [&](ContractSet z) {
        if (z.empty()) return true;
        const ContractSet joint = y | z;
        const AgentSet movers = m.signers(z);
        bool blocks = true;
        movers.for_each([&](int a) {
            if (!blocks) return;
            chosen[static_cast<std::size_t>(a)] = m.choose(a, joint);
            if (!m.restrict(z, a).subset_of(chosen[static_cast<std::size_t>(a)])) blocks = false;
        });
        if (!blocks) return true;
        bool consistent = true;
        joint.for_each([&](int c) {
            if (!consistent) return;
            const AgentSet owners = m.contract(c).signers & movers;
            if (owners.count() < 2) return;
            int keep = -1;
            owners.for_each([&](int a) {
                if (!consistent) return;
                const int k = chosen[static_cast<std::size_t>(a)].contains(c) ? 1 : 0;
                if (keep < 0)
                    keep = k;
                else if (keep != k)
                    consistent = false;
            });
        });
        if (!consistent) return true;
        ContractSet deviation;
        movers.for_each([&](int a) { deviation = deviation | chosen[static_cast<std::size_t>(a)]; });
        found = BlockWitness{BlockKind::weak_setwise, z, deviation};
        return false;
    });
    return found;
}

// A setwise block is a coordinated deviation: the agents signing the fresh
// contracts all strictly prefer the deviation outcome and hold individually
// rational portfolios in it. Deviation outcomes are enumerated directly; the
// fresh set is forced to be deviation minus audited outcome.
inline std::optional<BlockWitness> find_setwise_block(const Market& m, ContractSet y) {
    std::optional<BlockWitness> found;
    for_each_subset_canonical(m.all_contracts(), [&](ContractSet dev) {
        const ContractSet z = dev - y;
        if (z.empty()) return true;
        bool blocks = true;
        m.signers(z).for_each([&](int a) {
            if (!blocks) return;
            const ContractSet mine = m.restrict(dev, a);
            if (m.compare(a, mine, m.restrict(y, a)) != Rel::first || m.choose(a, dev) != mine)
                blocks = false;
        });
        if (!blocks) return true;
        found = BlockWitness{BlockKind::setwise, z, dev};
        return false;
    });
    return found;
}

// All individually rational outcomes, in canonical order. Always contains the
// empty outcome.
inline std::vector<ContractSet> enumerate_individually_rational(const Market& m) {
    if (m.contract_count() > Market::kMaxContracts)
        throw SizeCapError("market exceeds the contract cap");
    std::vector<ContractSet> out;
    for_each_subset_canonical(m.all_contracts(), [&](ContractSet y) {
        if (is_individually_rational(m, y)) out.push_back(y);
        return true;
    });
    return out;
}

inline bool pareto_dominates(const Market& m, ContractSet yp, ContractSet y) {
    bool strict = false;
    for (int a = 0; a < m.agent_count(); ++a) {
        switch (m.compare(a, m.restrict(yp, a), m.restrict(y, a))) {
            case Rel::first: strict = true; break;
            case Rel::equal: break;
            case Rel::second: return false;
        }
    }
    return strict;
}

struct EfficiencyResult {
    bool efficient = true;
    std::optional<ContractSet> dominated_by;
};

// Constrained efficiency of an individually rational outcome: no individually
// rational outcome Pareto dominates it. Returns the first dominator found in
// canonical order otherwise.
inline EfficiencyResult constrained_efficiency(const Market& m, ContractSet y,
                                               const std::vector<ContractSet>& ir_outcomes) {
    if (!is_individually_rational(m, y))
        throw std::invalid_argument("constrained_efficiency: outcome is not individually rational");
    for (ContractSet other : ir_outcomes)
        if (pareto_dominates(m, other, y)) return {false, other};
    return {true, std::nullopt};
}

inline EfficiencyResult constrained_efficiency(const Market& m, ContractSet y) {
    return constrained_efficiency(m, y, enumerate_individually_rational(m));
}

struct StabilityReport {
    ContractSet outcome;
    bool individually_rational = false;
    std::vector<int> ir_failures;
    bool stable = false;
    std::optional<BlockWitness> block;
    bool weakly_setwise_stable = false;
    std::optional<BlockWitness> weak_setwise_block;
    bool setwise_stable = false;
    std::optional<BlockWitness> setwise_block;
    // Only meaningful for individually rational outcomes; unset otherwise.
    std::optional<bool> constrained_efficient;
    std::optional<ContractSet> dominated_by;
};

inline StabilityReport audit(const Market& m, ContractSet y) {
    StabilityReport r;
    r.outcome = y;
    IrResult ir = individual_rationality(m, y);
    r.individually_rational = ir.ok;
    r.ir_failures = std::move(ir.failing_agents);
    r.block = find_block(m, y);
    r.stable = r.individually_rational && !r.block;
    r.weak_setwise_block = find_weak_setwise_block(m, y);
    r.weakly_setwise_stable = r.individually_rational && !r.weak_setwise_block;
    r.setwise_block = find_setwise_block(m, y);
    r.setwise_stable = r.individually_rational && !r.setwise_block;
    if (r.individually_rational) {
        EfficiencyResult eff = constrained_efficiency(m, y);
        r.constrained_efficient = eff.efficient;
        r.dominated_by = eff.dominated_by;
    }
    return r;
}

// --- report serialization ----------------------------------------------------

namespace detail {

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

inline std::string opt_set_text(const Market& m, const std::optional<ContractSet>& s) {
    return s ? m.set_text(*s) : std::string("none");
}

}  // namespace detail

// Line-oriented key=value form; every key is always present so that parsing
// the output reproduces the report exactly.
inline std::string report_structured(const Market& m, const StabilityReport& r) {
    std::ostringstream out;
    out << "outcome=" << m.set_text(r.outcome) << '\n';
    out << "individually_rational=" << detail::bool_text(r.individually_rational) << '\n';
    out << "ir_failures=";
    if (r.ir_failures.empty()) {
        out << "none";
    } else {
        for (std::size_t i = 0; i < r.ir_failures.size(); ++i)
            out << (i ? "," : "") << m.agent_name(r.ir_failures[i]);
    }
    out << '\n';
    out << "stable=" << detail::bool_text(r.stable) << '\n';
    out << "block=" << (r.block ? m.set_text(r.block->added) : std::string("none")) << '\n';
    out << "weakly_setwise_stable=" << detail::bool_text(r.weakly_setwise_stable) << '\n';
    out << "weak_setwise_block="
        << (r.weak_setwise_block ? m.set_text(r.weak_setwise_block->added) : std::string("none")) << '\n';
    out << "weak_setwise_deviation="
        << (r.weak_setwise_block ? detail::opt_set_text(m, r.weak_setwise_block->deviation)
                                 : std::string("none"))
        << '\n';
    out << "setwise_stable=" << detail::bool_text(r.setwise_stable) << '\n';
    out << "setwise_block=" << (r.setwise_block ? m.set_text(r.setwise_block->added) : std::string("none"))
        << '\n';
    out << "setwise_deviation="
        << (r.setwise_block ? detail::opt_set_text(m, r.setwise_block->deviation) : std::string("none"))
        << '\n';
    out << "constrained_efficient="
        << (r.constrained_efficient ? detail::bool_text(*r.constrained_efficient) : std::string("na"))
        << '\n';
    out << "dominated_by=" << detail::opt_set_text(m, r.dominated_by) << '\n';
    return out.str();
}

inline std::string report_text(const Market& m, const StabilityReport& r) {
    std::ostringstream out;
    out << "outcome " << m.set_text(r.outcome) << '\n';
    out << "  individually rational: " << (r.individually_rational ? "yes" : "no");
    if (!r.ir_failures.empty()) {
        out << "  (fails for";
        for (int a : r.ir_failures) out << ' ' << m.agent_name(a);
        out << ')';
    }
    out << '\n';
    out << "  stable: " << (r.stable ? "yes" : "no");
    if (r.block) out << "  (blocked by " << m.set_text(r.block->added) << ')';
    out << '\n';
    out << "  weakly setwise stable: " << (r.weakly_setwise_stable ? "yes" : "no");
    if (r.weak_setwise_block)
        out << "  (blocked by " << m.set_text(r.weak_setwise_block->added) << " deviating to "
            << detail::opt_set_text(m, r.weak_setwise_block->deviation) << ')';
    out << '\n';
    out << "  setwise stable: " << (r.setwise_stable ? "yes" : "no");
    if (r.setwise_block)
        out << "  (blocked by " << m.set_text(r.setwise_block->added) << " deviating to "
            << detail::opt_set_text(m, r.setwise_block->deviation) << ')';
    out << '\n';
    out << "  constrained efficient: ";
    if (!r.constrained_efficient)
        out << "n/a (not individually rational)";
    else if (*r.constrained_efficient)
        out << "yes";
    else
        out << "no  (dominated by " << detail::opt_set_text(m, r.dominated_by) << ')';
    out << '\n';
    return out.str();
}

// Parses the structured form back into a report. Returns nullopt and fills
// `error` on malformed input.
inline std::optional<StabilityReport> parse_report_structured(const Market& m, std::string_view text,
                                                              std::string& error) {
    StabilityReport r;
    std::istringstream in{std::string(text)};
    std::string line;
    std::optional<ContractSet> wss_z, wss_dev, ss_z, ss_dev, block_z;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            error = "malformed report line '" + line + "'";
            return std::nullopt;
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        auto parse_set = [&](std::optional<ContractSet>& out) -> bool {
            if (value == "none") {
                out = std::nullopt;
                return true;
            }
            auto s = parse_contract_set(m, value, error);
            if (!s) return false;
            out = *s;
            return true;
        };
        auto parse_bool = [&](bool& out) -> bool {
            if (value == "true") out = true;
            else if (value == "false") out = false;
            else {
                error = "bad boolean '" + value + "' for " + key;
                return false;
            }
            return true;
        };
        if (key == "outcome") {
            auto s = parse_contract_set(m, value, error);
            if (!s) return std::nullopt;
            r.outcome = *s;
        } else if (key == "individually_rational") {
            if (!parse_bool(r.individually_rational)) return std::nullopt;
        } else if (key == "ir_failures") {
            if (value != "none") {
                std::size_t start = 0;
                while (start <= value.size()) {
                    const auto comma = value.find(',', start);
                    const std::string name =
                        comma == std::string::npos ? value.substr(start) : value.substr(start, comma - start);
                    const int a = m.agent_index(name);
                    if (a < 0) {
                        error = "unknown agent '" + name + "' in ir_failures";
                        return std::nullopt;
                    }
                    r.ir_failures.push_back(a);
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            }
        } else if (key == "stable") {
            if (!parse_bool(r.stable)) return std::nullopt;
        } else if (key == "block") {
            if (!parse_set(block_z)) return std::nullopt;
        } else if (key == "weakly_setwise_stable") {
            if (!parse_bool(r.weakly_setwise_stable)) return std::nullopt;
        } else if (key == "weak_setwise_block") {
            if (!parse_set(wss_z)) return std::nullopt;
        } else if (key == "weak_setwise_deviation") {
            if (!parse_set(wss_dev)) return std::nullopt;
        } else if (key == "setwise_stable") {
            if (!parse_bool(r.setwise_stable)) return std::nullopt;
        } else if (key == "setwise_block") {
            if (!parse_set(ss_z)) return std::nullopt;
        } else if (key == "setwise_deviation") {
            if (!parse_set(ss_dev)) return std::nullopt;
        } else if (key == "constrained_efficient") {
            if (value == "na") {
                r.constrained_efficient = std::nullopt;
            } else {
                bool b = false;
                if (!parse_bool(b)) return std::nullopt;
                r.constrained_efficient = b;
            }
        } else if (key == "dominated_by") {
            if (!parse_set(r.dominated_by)) return std::nullopt;
        } else {
            error = "unknown report key '" + key + "'";
            return std::nullopt;
        }
    }
    if (block_z) r.block = BlockWitness{BlockKind::block, *block_z, std::nullopt};
    if (wss_z) r.weak_setwise_block = BlockWitness{BlockKind::weak_setwise, *wss_z, wss_dev};
    if (ss_z) r.setwise_block = BlockWitness{BlockKind::setwise, *ss_z, ss_dev};
    return r;
}

inline bool reports_equal(const StabilityReport& a, const StabilityReport& b) {
    auto wit_eq = [](const std::optional<BlockWitness>& x, const std::optional<BlockWitness>& y) {
        if (x.has_value() != y.has_value()) return false;
        if (!x) return true;
        return x->kind == y->kind && x->added == y->added && x->deviation == y->deviation;
    };
    return a.outcome == b.outcome && a.individually_rational == b.individually_rational &&
           a.ir_failures == b.ir_failures && a.stable == b.stable && wit_eq(a.block, b.block) &&
           a.weakly_setwise_stable == b.weakly_setwise_stable &&
           wit_eq(a.weak_setwise_block, b.weak_setwise_block) && a.setwise_stable == b.setwise_stable &&
           wit_eq(a.setwise_block, b.setwise_block) && a.constrained_efficient == b.constrained_efficient &&
           a.dominated_by == b.dominated_by;
}

}  // namespace multimatch
