#include "dcloss/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dcloss {

Decomposition decompose(const Circuit& c) {
    Decomposition d;

    std::vector<Element> cv_elements;
    for (const Element& e : c.elements) {
        if (e.kind == ElementKind::CurrentSource) continue;
        cv_elements.push_back(e);
    }
    d.cv = make_circuit(cv_elements);
    for (const std::string& n : c.nodes) {
        if (!d.cv.has_node(n)) d.dropped_nodes.push_back(n);
    }

    std::vector<Element> ci_elements;
    for (const Element& e : c.elements) {
        Element copy = e;
        if (copy.kind == ElementKind::VoltageSource) copy.value = 0.0;
        ci_elements.push_back(std::move(copy));
    }
    d.ci = make_circuit(ci_elements);

    for (const Element& e : c.elements) {
        if (e.kind == ElementKind::Resistor) d.resistors.push_back(e.id);
    }

    ValidationReport cv_report = validate(d.cv);
    if (!cv_report.well_posed) {
        std::string msg = "opening the current sources leaves a degenerate voltage sub-circuit:";
        for (const Fault& f : cv_report.faults) {
            msg += std::string(" [") + fault_code_name(f.code) + "]";
            for (const std::string& id : f.elements) msg += " " + id;
            msg += ";";
        }
        throw Error(ErrorCode::DegenerateSubcircuit, msg);
    }
    ValidationReport ci_report = validate(d.ci);
    if (!ci_report.well_posed) {
        throw Error(ErrorCode::DegenerateSubcircuit,
                    "shorting the voltage sources leaves a degenerate current sub-circuit");
    }
    return d;
}

SuperpositionReport superposition_check(const Circuit& c) {
    Decomposition d = decompose(c);
    Solution mixed = solve(c);
    Solution sv = solve(d.cv);
    Solution si = solve(d.ci);

    SuperpositionReport r;
    r.p_total = mixed.total_loss;
    r.p_v = sv.total_loss;
    r.p_i = si.total_loss;
    r.residual = std::abs(r.p_total - r.p_v - r.p_i);
    for (const Element& e : c.elements) {
        if (e.kind != ElementKind::Resistor) continue;
        double iv = sv.currents.at(e.id);
        double ii = si.currents.at(e.id);
        double im = mixed.currents.at(e.id);
        r.cross_term += e.value * iv * ii;
        r.current_identity_residual =
            std::max(r.current_identity_residual, std::abs(im - iv - ii));
    }
    return r;
}

double orthogonality_residual(const Circuit& c) {
    return superposition_check(c).cross_term;
}

} // namespace dcloss
