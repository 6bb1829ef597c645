#include "dcloss/reconfig.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dcloss/decomposition.hpp"
#include "dcloss/sensitivity.hpp"
#include "dcloss/solver.hpp"

namespace dcloss {

namespace {

std::vector<std::string> split_tokens(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

ElementKind kind_from_token(const std::string& tok) {
    if (tok == "R") return ElementKind::Resistor;
    if (tok == "V") return ElementKind::VoltageSource;
    if (tok == "I") return ElementKind::CurrentSource;
    throw Error(ErrorCode::SyntaxError, "unknown element kind '" + tok + "' (expected R, V or I)");
}

double value_from_token(const std::string& tok) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + tok.size()) {
        throw Error(ErrorCode::SyntaxError, "bad numeric value '" + tok + "'");
    }
    return v;
}

std::string fresh_node(const Circuit& c, std::string base) {
    while (c.has_node(base)) base += "'";
    return base;
}

} // namespace

TopologyEdit parse_edit(const std::string& text) {
    std::vector<std::string> t = split_tokens(text);
    if (t.empty()) throw Error(ErrorCode::SyntaxError, "empty edit spec");
    TopologyEdit edit;
    if (t[0] == "remove" && t.size() == 2) {
        edit.action = TopologyEdit::Action::Remove;
        edit.target = t[1];
        return edit;
    }
    if (t[0] == "add" && t.size() == 6) {
        edit.action = TopologyEdit::Action::Add;
        edit.element = Element{t[2], kind_from_token(t[1]), t[3], t[4], value_from_token(t[5])};
        return edit;
    }
    if (t[0] == "subdivide" && t.size() == 6 && t[2] == "with") {
        edit.action = TopologyEdit::Action::Subdivide;
        edit.target = t[1];
        edit.element = Element{t[4], kind_from_token(t[3]), "", "", value_from_token(t[5])};
        return edit;
    }
    throw Error(ErrorCode::SyntaxError,
                "bad edit spec '" + text +
                    "' (expected `remove <id>`, `add <K> <id> <n+> <n-> <value>` or "
                    "`subdivide <id> with <K> <id> <value>`)");
}

std::string format_edit(const TopologyEdit& edit) {
    std::ostringstream out;
    char buf[64];
    switch (edit.action) {
        case TopologyEdit::Action::Remove:
            out << "remove " << edit.target;
            break;
        case TopologyEdit::Action::Add:
            std::snprintf(buf, sizeof(buf), "%.17g", edit.element->value);
            out << "add " << element_kind_letter(edit.element->kind) << ' ' << edit.element->id
                << ' ' << edit.element->from << ' ' << edit.element->to << ' ' << buf;
            break;
        case TopologyEdit::Action::Subdivide:
            std::snprintf(buf, sizeof(buf), "%.17g", edit.element->value);
            out << "subdivide " << edit.target << " with "
                << element_kind_letter(edit.element->kind) << ' ' << edit.element->id << ' ' << buf;
            break;
    }
    return out.str();
}

Circuit apply_edit(const Circuit& c, const TopologyEdit& edit) {
    std::vector<Element> elements = c.elements;
    switch (edit.action) {
        case TopologyEdit::Action::Remove: {
            const Element* target = c.find(edit.target);
            if (!target) {
                throw Error(ErrorCode::UnknownElement, "no element '" + edit.target + "' to remove");
            }
            if (classify_edit(c, edit) == EditClass::Parallel) {
                elements.erase(std::remove_if(elements.begin(), elements.end(),
                                              [&](const Element& e) { return e.id == edit.target; }),
                               elements.end());
            } else {
                // Serial removal contracts the pair: a zero-volt source
                // under the same id stands in for the merged nodes.
                for (Element& e : elements) {
                    if (e.id != edit.target) continue;
                    e.kind = ElementKind::VoltageSource;
                    e.value = 0.0;
                }
            }
            break;
        }
        case TopologyEdit::Action::Add: {
            const Element& n = *edit.element;
            if (!c.has_node(n.from) || !c.has_node(n.to)) {
                throw Error(ErrorCode::UnknownNode,
                            "parallel attachment requires existing nodes '" + n.from + "' and '" +
                                n.to + "'");
            }
            if (c.find(n.id)) {
                throw Error(ErrorCode::DuplicateId, "element id '" + n.id + "' already in circuit");
            }
            elements.push_back(n);
            break;
        }
        case TopologyEdit::Action::Subdivide: {
            const Element* target = c.find(edit.target);
            if (!target) {
                throw Error(ErrorCode::UnknownElement,
                            "no element '" + edit.target + "' to subdivide");
            }
            if (c.find(edit.element->id)) {
                throw Error(ErrorCode::DuplicateId,
                            "element id '" + edit.element->id + "' already in circuit");
            }
            std::string mid = fresh_node(c, edit.element->id + ":n");
            Element inserted = *edit.element;
            inserted.from = mid;
            inserted.to = target->to;
            for (Element& e : elements) {
                if (e.id == edit.target) e.to = mid;
            }
            elements.push_back(std::move(inserted));
            break;
        }
    }
    return make_circuit(elements);
}

EditClass classify_edit(const Circuit& c, const TopologyEdit& edit) {
    switch (edit.action) {
        case TopologyEdit::Action::Remove:
            if (edit.removal_class) return *edit.removal_class;
            return classify_removal(c, edit.target);
        case TopologyEdit::Action::Add: return EditClass::Parallel;
        case TopologyEdit::Action::Subdivide: return EditClass::Serial;
    }
    return EditClass::Parallel;
}

double delta_oracle(const Circuit& c, const TopologyEdit& edit) {
    require_well_posed(c);
    Circuit edited = apply_edit(c, edit);
    ValidationReport report = validate(edited);
    if (!report.well_posed) {
        std::string msg = "edit `" + format_edit(edit) + "` leaves an ill-posed circuit:";
        for (const Fault& f : report.faults) {
            msg += std::string(" [") + fault_code_name(f.code) + "]";
        }
        throw Error(ErrorCode::EditIllPosed, msg);
    }
    return solve(edited).total_loss - solve(c).total_loss;
}

namespace {

/// Prediction of a removal's loss change from sub-circuit terminal
/// quantities; `forced` overrides the bridge classification when the removal
/// is the inverse of a known attachment.
DeltaLossReport predict_removal(const Circuit& c, const std::string& id, EditClass cls) {
    const Element* e = c.find(id);
    if (!e) throw Error(ErrorCode::UnknownElement, "no element '" + id + "' in circuit");

    DeltaLossReport rep;
    rep.classified = cls;

    std::vector<Element> elements = c.elements;
    if (cls == EditClass::Parallel) {
        elements.erase(std::remove_if(elements.begin(), elements.end(),
                                      [&](const Element& el) { return el.id == id; }),
                       elements.end());
    } else {
        for (Element& el : elements) {
            if (el.id != id) continue;
            el.kind = ElementKind::VoltageSource;
            el.value = 0.0;
        }
    }
    Circuit after = make_circuit(elements);

    auto paper_voltage = [&](const Solution& s) {
        return s.potentials.at(e->to) - s.potentials.at(e->from);
    };

    switch (e->kind) {
        case ElementKind::Resistor: {
            Decomposition before_dec = decompose(c);
            Decomposition after_dec = decompose(after);
            Solution cv_b = solve(before_dec.cv);
            Solution ci_b = solve(before_dec.ci);
            Solution cv_a = solve(after_dec.cv);
            Solution ci_a = solve(after_dec.ci);
            rep.i_before = {cv_b.currents.at(id), ci_b.currents.at(id)};
            rep.v_before = {paper_voltage(cv_b), paper_voltage(ci_b)};
            if (cls == EditClass::Parallel) {
                rep.v_after = {paper_voltage(cv_a), paper_voltage(ci_a)};
                rep.dp_v = *rep.i_before.cv * *rep.v_after.cv;
                rep.dp_i = -*rep.i_before.ci * *rep.v_after.ci;
            } else {
                // The contracted pair is measured through its stand-in short.
                rep.i_after = {cv_a.currents.at(id), ci_a.currents.at(id)};
                rep.v_after = {0.0, 0.0};
                rep.dp_v = -*rep.i_after.cv * *rep.v_before.cv;
                rep.dp_i = *rep.i_after.ci * *rep.v_before.ci;
            }
            break;
        }
        case ElementKind::CurrentSource: {
            if (cls != EditClass::Parallel) {
                throw Error(ErrorCode::UnsupportedEdit,
                            "serial current-source edits have no closed-form prediction");
            }
            Solution ci_b = solve(decompose(c).ci);
            Solution ci_a = solve(decompose(after).ci);
            double v_b = paper_voltage(ci_b); // delivery polarity of the source
            double v_a = paper_voltage(ci_a);
            rep.i_before.ci = e->value;
            rep.v_before.ci = v_b;
            rep.v_after.ci = v_a;
            rep.dp_i = -e->value * (v_b + v_a);
            rep.dp_v = 0.0;
            break;
        }
        case ElementKind::VoltageSource: {
            if (cls != EditClass::Serial) {
                throw Error(ErrorCode::UnsupportedEdit,
                            "parallel voltage-source edits have no closed-form prediction");
            }
            Solution cv_b = solve(decompose(c).cv);
            Solution cv_a = solve(decompose(after).cv);
            const Element* short_after = after.find(id);
            double i_b = source_delivery_current(cv_b, *e);
            double i_a = source_delivery_current(cv_a, *short_after);
            rep.i_before.cv = i_b;
            rep.i_after.cv = i_a;
            rep.v_before.cv = e->value;
            rep.dp_v = -e->value * (i_b + i_a);
            rep.dp_i = 0.0;
            break;
        }
    }
    rep.dp_predicted = rep.dp_v + rep.dp_i;
    return rep;
}

void swap_before_after(DeltaLossReport& rep) {
    std::swap(rep.i_before, rep.i_after);
    std::swap(rep.v_before, rep.v_after);
}

} // namespace

DeltaLossReport predict_delta(const Circuit& c, const TopologyEdit& edit) {
    require_well_posed(c);
    double dp_oracle = delta_oracle(c, edit);

    DeltaLossReport rep;
    switch (edit.action) {
        case TopologyEdit::Action::Remove:
            rep = predict_removal(c, edit.target, classify_edit(c, edit));
            break;
        case TopologyEdit::Action::Add: {
            // Attachment and removal at one site have exactly opposite effect.
            Circuit edited = apply_edit(c, edit);
            rep = predict_removal(edited, edit.element->id, EditClass::Parallel);
            rep.dp_v = -rep.dp_v;
            rep.dp_i = -rep.dp_i;
            rep.dp_predicted = -rep.dp_predicted;
            swap_before_after(rep);
            break;
        }
        case TopologyEdit::Action::Subdivide: {
            Circuit edited = apply_edit(c, edit);
            rep = predict_removal(edited, edit.element->id, EditClass::Serial);
            rep.dp_v = -rep.dp_v;
            rep.dp_i = -rep.dp_i;
            rep.dp_predicted = -rep.dp_predicted;
            swap_before_after(rep);
            break;
        }
    }
    rep.classified = classify_edit(c, edit);
    rep.dp_oracle = dp_oracle;
    rep.agreement = std::abs(rep.dp_predicted - dp_oracle);
    return rep;
}

namespace {

/// Loss change from attaching `r_attach` across the terminals of a mixed
/// equivalent: the Thevenin branch gains v_eq^2/(r_eq + r) and the Norton
/// branch relaxes by i_eq^2 (r_eq || r - r_eq).
double attach_to_equivalent(const Equivalent& eq, double r_attach) {
    double denom = eq.r_eq + r_attach;
    if (denom == 0.0) {
        if (std::abs(eq.v_eq) == 0.0) return 0.0;
        throw Error(ErrorCode::EditIllPosed,
                    "shorting a terminal pair held at a fixed nonzero voltage");
    }
    double parallel = eq.r_eq * r_attach / denom;
    return eq.v_eq * eq.v_eq / denom + eq.i_eq * eq.i_eq * (parallel - eq.r_eq);
}

} // namespace

double predict_delta_via_equivalent(const Circuit& c, const TopologyEdit& edit) {
    require_well_posed(c);
    const Element* subject = edit.action == TopologyEdit::Action::Remove
                                 ? c.find(edit.target)
                                 : &*edit.element;
    if (!subject) throw Error(ErrorCode::UnknownElement, "no element '" + edit.target + "'");
    if (subject->kind != ElementKind::Resistor) {
        throw Error(ErrorCode::UnsupportedEdit,
                    "the equivalent-circuit predictor covers resistor edits only");
    }

    switch (edit.action) {
        case TopologyEdit::Action::Remove: {
            if (classify_edit(c, edit) == EditClass::Parallel) {
                Circuit base = apply_edit(c, edit);
                if (!validate(base).well_posed) {
                    throw Error(ErrorCode::EditIllPosed,
                                "edit `" + format_edit(edit) + "` leaves an ill-posed circuit");
                }
                Equivalent eq = equivalent(base, subject->from, subject->to, EquivalentKind::Mixed);
                return -attach_to_equivalent(eq, subject->value);
            }
            // Serial removal is the parallel attachment of a zero-resistance
            // edge across the pair.
            Equivalent eq = equivalent(c, subject->from, subject->to, EquivalentKind::Mixed);
            return attach_to_equivalent(eq, 0.0);
        }
        case TopologyEdit::Action::Add: {
            Equivalent eq = equivalent(c, subject->from, subject->to, EquivalentKind::Mixed);
            return attach_to_equivalent(eq, subject->value);
        }
        case TopologyEdit::Action::Subdivide: {
            Circuit edited = apply_edit(c, edit);
            const Element* inserted = edited.find(edit.element->id);
            Equivalent eq =
                equivalent(edited, inserted->from, inserted->to, EquivalentKind::Mixed);
            return -attach_to_equivalent(eq, 0.0);
        }
    }
    throw Error(ErrorCode::UnsupportedEdit, "unknown edit action");
}

Ranking rank_switchings(const Circuit& c, const std::vector<TopologyEdit>& candidates) {
    require_well_posed(c);
    Ranking result;
    for (const TopologyEdit& edit : candidates) {
        try {
            result.ranked.push_back({edit, predict_delta(c, edit)});
        } catch (const Error& err) {
            result.excluded.push_back({edit, err.code(), err.what()});
        }
    }
    std::stable_sort(result.ranked.begin(), result.ranked.end(),
                     [](const RankedEdit& x, const RankedEdit& y) {
                         if (x.report.dp_predicted != y.report.dp_predicted) {
                             return x.report.dp_predicted < y.report.dp_predicted;
                         }
                         auto key = [](const RankedEdit& r) {
                             return r.edit.element ? r.edit.element->id : r.edit.target;
                         };
                         if (key(x) != key(y)) return key(x) < key(y);
                         return format_edit(x.edit) < format_edit(y.edit);
                     });
    return result;
}

PolarityCheck polarity_check(const Circuit& c, const std::string& m, const std::string& n,
                             double r) {
    if (r <= 0.0) {
        throw Error(ErrorCode::NonPositiveResistance, "polarity check requires r > 0");
    }
    if (!c.has_node(m) || !c.has_node(n) || m == n) {
        throw Error(ErrorCode::UnknownNode, "polarity check requires two distinct circuit nodes");
    }
    Solution before = solve(c);
    std::vector<Element> elements = c.elements;
    std::string id = "attach";
    while (c.find(id)) id += "'";
    elements.push_back({id, ElementKind::Resistor, m, n, r});
    Solution after = solve(make_circuit(elements));

    PolarityCheck check;
    check.v_before = before.potentials.at(m) - before.potentials.at(n);
    check.v_after = after.potentials.at(m) - after.potentials.at(n);
    double scale = std::max(std::abs(check.v_before), std::abs(check.v_after));
    check.holds = std::abs(check.v_after) <= std::abs(check.v_before) + 1e-12 * scale &&
                  check.v_after * check.v_before >= -1e-12 * scale * scale;
    return check;
}

} // namespace dcloss
