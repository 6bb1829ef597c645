#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dcloss/graph.hpp"
#include "dcloss/netlist.hpp"
#include "dcloss/qp.hpp"

namespace dcloss {

/// Quadratic total-loss potential of the resistors over the fundamental node
/// voltages e_1..e_D (the potentials of the basis representatives).  A V2
/// resistor between supernodes i and j with endpoint offsets o_a, o_b
/// contributes (e_i + o_a - e_j - o_b)^2 / R; V1 resistors have a fixed drop
/// and only contribute to constant_loss.
struct VoltagePotential {
    std::vector<std::string> variables; // representative node ids, size D
    double constant_loss = 0.0;         // loss of the V1 resistors

    struct Term {
        std::string resistor;
        int i = 0;              // supernode of the `from` endpoint
        int j = 0;              // supernode of the `to` endpoint
        double resistance = 0.0;
        double offset_from = 0.0; // path offset of the `from` endpoint
        double offset_to = 0.0;   // path offset of the `to` endpoint
    };
    std::vector<Term> terms; // V2 resistors, file order

    QuadraticForm quadratic;
};

VoltagePotential build_voltage_potential(const Circuit& c, const NodeBasis& nb,
                                         const ResistorClasses& classes);

/// Quadratic total-loss potential over the fundamental cycle (chord)
/// currents.  Every resistor current is the signed sum of the chord currents
/// of the cycles containing it plus a fixed injection obtained by routing
/// each current source through the spanning tree; the loss of the cycle-free
/// (I1) resistors is the constant part.
struct CurrentPotential {
    std::vector<std::string> variables; // chord resistor ids, size N
    double constant_loss = 0.0;         // loss of the I1 resistors

    struct ExclusiveTerm { // I2: resistor owned by exactly one cycle
        int cycle = 0;     // index into variables
        std::string resistor;
        double resistance = 0.0;
        int sign = 1;           // orientation of the resistor inside the cycle
        double injection = 0.0; // amps, in the resistor's own orientation
    };
    std::vector<ExclusiveTerm> i2_terms;

    struct SharedTerm { // I3: resistor shared by two or more cycles
        std::string resistor;
        double resistance = 0.0;
        std::vector<std::pair<int, int>> cycles; // (cycle index, sign)
        double injection = 0.0;
    };
    std::vector<SharedTerm> i3_terms;

    struct FixedTerm { // I1: resistor in no cycle, current fully determined
        std::string resistor;
        double resistance = 0.0;
        double injection = 0.0;
    };
    std::vector<FixedTerm> i1_terms;

    QuadraticForm quadratic;
};

CurrentPotential build_current_potential(const Circuit& c, const CycleBasis& cb,
                                         const ResistorClasses& classes);

enum class LossMethod { A, B, C, D };

const char* loss_method_name(LossMethod m);

struct LossResult {
    LossMethod method = LossMethod::A;
    double loss = 0.0;
    /// Minimizing variable assignment; empty for method A.  Keys are
    /// "e(<node>)" for fundamental node voltages and "I(<chord>)" for
    /// fundamental cycle currents.
    std::vector<std::pair<std::string, double>> witness;
};

/// Four equivalent routes to the total loss:
///   A  solve the full Kirchhoff system and sum i^2 R;
///   B  minimize the mixed circuit's cycle-current potential subject to the
///      cycle voltage-balance constraints carrying the voltage sources;
///   C  minimize the mixed circuit's node-voltage potential subject to the
///      supernode current-balance constraints carrying the current sources;
///   D  decompose and add the unconstrained minima of the sub-circuit
///      potentials.
LossResult compute_loss(const Circuit& c, LossMethod method);

std::vector<LossResult> compute_all_losses(const Circuit& c);

} // namespace dcloss
