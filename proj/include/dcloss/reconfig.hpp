#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dcloss/graph.hpp"
#include "dcloss/netlist.hpp"

namespace dcloss {

/// A single-element topology edit.
///
/// Remove deletes a non-bridge element (parallel removal) or contracts a
/// bridge by turning it into a zero-volt source (serial removal).  Add
/// attaches a new element between two existing nodes (parallel attachment).
/// Subdivide splits `target` at a fresh node and inserts the new element in
/// series with it (serial attachment); the new element's endpoints are
/// derived, not caller supplied.
///
/// Some elements admit both removal flavors (deleting an edge drops a cycle,
/// contracting it merges a node pair); `removal_class` overrides the
/// bridge-based default when the caller wants one specifically.  The edit
/// mini-grammar always uses the default.
struct TopologyEdit {
    enum class Action { Remove, Add, Subdivide };
    Action action = Action::Remove;
    std::string target;             // Remove / Subdivide
    std::optional<Element> element; // Add / Subdivide
    std::optional<EditClass> removal_class;
};

/// Mini-grammar: `remove <id>`, `add <K> <id> <n+> <n-> <value>`,
/// `subdivide <target> with <K> <id> <value>` with K in {R,V,I}.
TopologyEdit parse_edit(const std::string& text);

std::string format_edit(const TopologyEdit& edit);

Circuit apply_edit(const Circuit& c, const TopologyEdit& edit);

EditClass classify_edit(const Circuit& c, const TopologyEdit& edit);

/// Terminal quantity measured in the voltage-controlled and/or
/// current-controlled sub-circuit; absent when the edit leaves it undefined.
struct SubQuantity {
    std::optional<double> cv;
    std::optional<double> ci;
};

/// Closed-form prediction of a topology edit's loss change, decomposed into
/// the voltage-sub-circuit and current-sub-circuit shares.
///
/// Terminal quantities follow the passive-sign pairing: at a pair (m, n) the
/// current is measured m -> n through the subject element and the voltage as
/// potential(n) - potential(m), so a resistor's are of opposite polarity;
/// source edits use the source's delivery quantities.
struct DeltaLossReport {
    EditClass classified = EditClass::Parallel;
    double dp_predicted = 0.0;
    double dp_v = 0.0;
    double dp_i = 0.0;
    double dp_oracle = 0.0;
    double agreement = 0.0; // |dp_predicted - dp_oracle|
    SubQuantity i_before;
    SubQuantity v_before;
    SubQuantity i_after;
    SubQuantity v_after;
};

/// Ground truth by two full solves: loss(after) - loss(before).
double delta_oracle(const Circuit& c, const TopologyEdit& edit);

/// Loss change predicted from sub-circuit terminal quantities alone:
/// resistor edits decompose as dp = dp_v + dp_i, parallel current-source
/// edits are pure dp_i, serial voltage-source edits pure dp_v.  Edits the
/// closed forms do not cover (parallel voltage-source or serial
/// current-source edits) raise Error{UnsupportedEdit}.
DeltaLossReport predict_delta(const Circuit& c, const TopologyEdit& edit);

/// Same prediction computed entirely inside the three-element mixed
/// equivalent at the edit's terminal pair; resistor edits only.
double predict_delta_via_equivalent(const Circuit& c, const TopologyEdit& edit);

struct RankedEdit {
    TopologyEdit edit;
    DeltaLossReport report;
};

struct ExcludedEdit {
    TopologyEdit edit;
    ErrorCode code;
    std::string message;
};

struct Ranking {
    std::vector<RankedEdit> ranked;     // ascending dp_predicted
    std::vector<ExcludedEdit> excluded; // ill-posed or uncovered candidates
};

Ranking rank_switchings(const Circuit& c, const std::vector<TopologyEdit>& candidates);

struct PolarityCheck {
    double v_before = 0.0;
    double v_after = 0.0;
    bool holds = false;
};

/// Attaches a resistor across (m, n) and checks that the terminal voltage
/// shrinks in magnitude without flipping sign.
PolarityCheck polarity_check(const Circuit& c, const std::string& m, const std::string& n,
                             double r);

} // namespace dcloss
