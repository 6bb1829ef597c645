#include "dcloss/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "dcloss/decomposition.hpp"
#include "dcloss/graph.hpp"
#include "dcloss/solver.hpp"

namespace dcloss {

namespace {

Circuit with_single_unit_source(const Circuit& c, const std::string& driver) {
    std::vector<Element> elements;
    for (const Element& e : c.elements) {
        Element copy = e;
        if (copy.kind != ElementKind::Resistor) copy.value = (copy.id == driver) ? 1.0 : 0.0;
        elements.push_back(std::move(copy));
    }
    return make_circuit(elements);
}

} // namespace

SourceFactorMatrix source_factors(const Circuit& c) {
    SourceFactorMatrix m;
    std::vector<const Element*> vs;
    std::vector<const Element*> cs;
    for (const Element& e : c.elements) {
        if (e.kind == ElementKind::VoltageSource) {
            m.voltage_sources.push_back(e.id);
            vs.push_back(&e);
        } else if (e.kind == ElementKind::CurrentSource) {
            m.current_sources.push_back(e.id);
            cs.push_back(&e);
        }
    }
    const int l = static_cast<int>(vs.size());
    const int k = static_cast<int>(cs.size());
    m.svv.resize(l, l);
    m.svi.resize(l, k);
    m.siv.resize(k, l);
    m.sii.resize(k, k);

    auto fill_row = [&](const std::string& driver, auto&& store) {
        Solution s = solve(with_single_unit_source(c, driver));
        for (int i = 0; i < l; ++i) store(true, i, source_delivery_current(s, *vs[i]));
        for (int i = 0; i < k; ++i) store(false, i, source_delivery_voltage(s, *cs[i]));
    };
    for (int j = 0; j < l; ++j) {
        fill_row(vs[j]->id, [&](bool to_voltage, int i, double value) {
            (to_voltage ? m.svv(j, i) : m.svi(j, i)) = value;
        });
    }
    for (int j = 0; j < k; ++j) {
        fill_row(cs[j]->id, [&](bool to_voltage, int i, double value) {
            (to_voltage ? m.siv(j, i) : m.sii(j, i)) = value;
        });
    }
    return m;
}

double reciprocity_residual(const SourceFactorMatrix& m) {
    auto norm = [](const Eigen::MatrixXd& a) {
        return a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
    };
    double residual = 0.0;
    if (m.svv.size()) {
        residual = std::max(residual,
                            norm(m.svv - m.svv.transpose()) / std::max(norm(m.svv), 1e-300));
    }
    if (m.sii.size()) {
        residual = std::max(residual,
                            norm(m.sii - m.sii.transpose()) / std::max(norm(m.sii), 1e-300));
    }
    if (m.siv.size() && m.svi.size()) {
        double scale = std::max({norm(m.siv), norm(m.svi), 1e-300});
        residual = std::max(residual, norm(m.siv + m.svi.transpose()) / scale);
    }
    return residual;
}

const char* equivalent_kind_name(EquivalentKind k) {
    switch (k) {
        case EquivalentKind::Thevenin: return "thevenin";
        case EquivalentKind::Norton: return "norton";
        case EquivalentKind::Mixed: return "mixed";
    }
    return "?";
}

namespace {

std::string fresh_id(const Circuit& c, std::string base) {
    while (c.find(base)) base += "'";
    return base;
}

Circuit with_zeroed_sources(const Circuit& c) {
    std::vector<Element> elements;
    for (const Element& e : c.elements) {
        Element copy = e;
        if (copy.kind != ElementKind::Resistor) copy.value = 0.0;
        elements.push_back(std::move(copy));
    }
    return make_circuit(elements);
}

/// Resistance between m and n with all sources zeroed, via a 1 A probe.
double equivalent_resistance(const Circuit& c, const std::string& m, const std::string& n) {
    Circuit zeroed = with_zeroed_sources(c);
    Element probe{fresh_id(zeroed, "probe"), ElementKind::CurrentSource, n, m, 1.0};
    std::vector<Element> elements = zeroed.elements;
    elements.push_back(probe);
    Solution s = solve(make_circuit(elements));
    return s.potentials.at(m) - s.potentials.at(n);
}

/// Current m -> n through a zero-volt source attached across the terminals.
double short_circuit_current(const Circuit& c, const std::string& m, const std::string& n) {
    Element short_edge{fresh_id(c, "short"), ElementKind::VoltageSource, m, n, 0.0};
    std::vector<Element> elements = c.elements;
    elements.push_back(short_edge);
    Solution s = solve(make_circuit(elements));
    return s.currents.at(short_edge.id);
}

bool same_supernode(const Circuit& c, const std::string& m, const std::string& n) {
    NodeBasis nb = fundamental_node_basis(c);
    return nb.supernode_of.at(m) == nb.supernode_of.at(n);
}

} // namespace

Equivalent equivalent(const Circuit& c, const std::string& m, const std::string& n,
                      EquivalentKind kind) {
    if (m == n || !c.has_node(m) || !c.has_node(n)) {
        throw Error(ErrorCode::UnknownNode,
                    "equivalent requires two distinct circuit nodes, got '" + m + "', '" + n + "'");
    }
    Equivalent eq;
    eq.kind = kind;
    eq.terminals = {m, n};

    bool shorted_terminals = same_supernode(c, m, n);
    try {
        eq.r_eq = shorted_terminals ? 0.0 : equivalent_resistance(c, m, n);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SingularSystem) {
            throw Error(ErrorCode::NoEquivalent,
                        "terminals fall apart once sources are zeroed; no finite equivalent");
        }
        throw;
    }

    switch (kind) {
        case EquivalentKind::Thevenin: {
            Solution s = solve(c);
            eq.v_eq = s.potentials.at(m) - s.potentials.at(n);
            break;
        }
        case EquivalentKind::Norton: {
            if (shorted_terminals) {
                throw Error(ErrorCode::NoEquivalent,
                            "terminals are joined by voltage sources (r_eq = 0); the short-circuit "
                            "current is unbounded");
            }
            eq.i_eq = short_circuit_current(c, m, n);
            break;
        }
        case EquivalentKind::Mixed: {
            Decomposition dec = decompose(c);
            Solution sv = solve(dec.cv);
            eq.v_eq = sv.potentials.at(m) - sv.potentials.at(n);
            // With r_eq = 0 the parallel source never diverts current into
            // an attached edge, so the degenerate value 0 keeps predictions
            // exact.
            eq.i_eq = shorted_terminals ? 0.0 : short_circuit_current(dec.ci, m, n);
            break;
        }
    }
    return eq;
}

} // namespace dcloss
