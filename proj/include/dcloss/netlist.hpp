#pragma once

#include <string>
#include <vector>

#include "dcloss/errors.hpp"

namespace dcloss {

enum class ElementKind { Resistor, VoltageSource, CurrentSource };

char element_kind_letter(ElementKind kind);

/// A single two-terminal element.
///
/// Orientation convention used throughout the library: the element current i
/// is measured from `from` to `to` through the element, and the element
/// voltage is v = potential(from) - potential(to).  A resistor obeys v = i*R
/// and consumes p = v*i >= 0.  A voltage source enforces v = value.  A
/// current source enforces i = value, i.e. it drives `value` amps out of its
/// `to` terminal into the external circuit.
struct Element {
    std::string id;
    ElementKind kind = ElementKind::Resistor;
    std::string from;
    std::string to;
    double value = 0.0;
};

struct Circuit {
    std::vector<std::string> nodes;  // order of first appearance
    std::vector<Element> elements;   // file order

    const Element* find(const std::string& id) const;
    bool has_node(const std::string& id) const;
};

/// Builds a circuit from elements, collecting nodes in order of first
/// appearance and enforcing the structural element invariants (unique ids,
/// positive resistances, finite source values, no self-loops).
Circuit make_circuit(const std::vector<Element>& elements);

enum class CircuitClass { Passive, VoltageControlled, CurrentControlled, Mixed };

CircuitClass circuit_class(const Circuit& c);

enum class FaultCode {
    Disconnected,
    InconsistentVoltageLoop,
    RedundantVoltageLoop,
    UnbalancedCurrentCut,
    RedundantCurrentCut,
};

const char* fault_code_name(FaultCode code);

struct Fault {
    FaultCode code;
    std::vector<std::string> elements;
    std::string message;
};

struct ValidationReport {
    bool well_posed = false;
    std::vector<Fault> faults;
};

/// Semantic well-posedness checks.  A circuit passes exactly when the
/// augmented nodal system of the solver module is non-singular: connected,
/// no cycles of pure voltage-source edges (consistent or not), and no node
/// group attached to the rest only through current sources.
ValidationReport validate(const Circuit& c);

/// Throws Error{InvalidCircuit} when validate(c) reports faults.
void require_well_posed(const Circuit& c);

/// Netlist grammar: one element per line, `<K> <id> <n+> <n-> <value>` with
/// K in {R,V,I}; `#` starts a comment; tokens are whitespace-separated;
/// node ids are arbitrary tokens with no reserved ground.
Circuit parse_netlist(const std::string& text);

std::string serialize_netlist(const Circuit& c);

/// DC power-flow case: injections in power units, branches with reactances.
struct GridBus {
    std::string id;
    double injection = 0.0;
};

struct GridBranch {
    std::string id;
    std::string from;
    std::string to;
    double reactance = 0.0;
};

struct GridCase {
    std::vector<GridBus> buses;
    std::vector<GridBranch> branches;
};

/// Grid file grammar: `BUS <id> <injection>` and
/// `BRANCH <id> <from> <to> <reactance>` lines, same lexical rules as the
/// netlist format.
GridCase parse_grid(const std::string& text);

/// Maps a grid case onto the equivalent current-driven circuit: one node per
/// bus, every branch a resistor of value equal to its reactance, and every
/// bus injection a current source from the reference bus (the first bus in
/// file order) to that bus.  Phase angles of the grid become node potentials
/// of the circuit and branch power flows become branch currents.
Circuit import_grid(const GridCase& g);

} // namespace dcloss
